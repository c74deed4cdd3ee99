"""Trial recorder: one line per Monte Carlo trial with its flags."""

import logging

logger = logging.getLogger(__name__)


def format_trial(outcome, seed, ball_size):
    """Render a trial as 'key=value' pairs separated by spaces."""
    return (f"trial={outcome.trial} seed={seed} |V_B|={ball_size} "
            f"majority={int(outcome.majority)} order_ok={int(outcome.order_ok)} "
            f"success={int(outcome.success)}")


class TrialRecorder:
    """Collects trial lines and writes them to a stream or a file.

    Lines are written in trial order, whatever order the trials finished in.
    """

    def __init__(self, path=None, stream=None):
        self.path = path
        self.stream = stream
        self.lines = []

    def log_trial(self, outcome, seed, ball_size):
        self.lines.append((outcome.trial, format_trial(outcome, seed, ball_size)))

    def flush(self):
        """Write the recorded lines sorted by trial index.

        Returns:
            Number of lines written.
        """
        ordered = [line for _, line in sorted(self.lines)]
        if self.path is not None:
            with open(self.path, 'a', encoding='utf-8') as f:
                f.writelines(line + '\n' for line in ordered)
            logger.debug("Wrote %d trial lines to %s", len(ordered), self.path)
        elif self.stream is not None:
            self.stream.writelines(line + '\n' for line in ordered)
        self.lines.clear()
        return len(ordered)

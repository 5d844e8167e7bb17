# services/session/session_worker.py

import logging

from PyQt5.QtCore import QObject, QRunnable, pyqtSignal  # pylint: disable=no-name-in-module

from services.session.session_runner import INTERLEAVED, SessionRunner


class SessionSignals(QObject):
    finished = pyqtSignal(object)  # SessionReport
    error = pyqtSignal(str)
    progress = pyqtSignal(int, int, object)  # blocks done, n_blocks, BlockResult


class SessionWorker(QRunnable):
    """
    Worker for running a full session with progress reporting and cancellation.

    The CLI calls run() directly; slots connected from the same thread are
    invoked synchronously, so no event loop is needed.
    """
    def __init__(self, config, schedule=INTERLEAVED, transport='queue', workers=1):
        super().__init__()
        self.config = config
        self.schedule = schedule
        self.transport = transport
        self.workers = workers
        self.signals = SessionSignals()
        self.logger = logging.getLogger(self.__class__.__name__)  # pylint: disable=no-member
        self.report = None
        self.exception = None

        # Initialize interruption flag
        self._is_interrupted = False

    def set_interrupted(self):
        """
        Sets the interruption flag to True to signal cancellation.
        """
        self._is_interrupted = True
        self.logger.info("Worker received interruption signal.")

    def run(self):
        try:
            self.logger.info(f"Starting session with seed {self.config.seed} and {self.config.n_blocks} blocks")
            runner = SessionRunner(self.config, schedule=self.schedule, transport=self.transport, workers=self.workers)
            report = runner.run(
                progress_callback=self.emit_progress,
                interruption_flag=lambda: self._is_interrupted,
            )
            self.report = report
            if self._is_interrupted:
                self.logger.info("Session was interrupted by the user.")
                self.signals.error.emit("Session was canceled by the user.")
                return report
            self.signals.finished.emit(report)
            return report
        except Exception as e:  # pylint: disable=broad-except
            error_msg = f"An exception occurred during the session: {str(e)}"
            self.logger.error(error_msg, exc_info=True)
            self.exception = e
            self.signals.error.emit(error_msg)
            return None

    def emit_progress(self, done, total, result):
        """
        Emits a progress signal for one finished block.
        """
        self.signals.progress.emit(done, total, result)

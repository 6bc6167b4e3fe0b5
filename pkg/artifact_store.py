#!/usr/bin/env python3

import os
import io
import csv
import json
import fcntl
import tempfile
import contextlib
import logging


class ArtifactStore:
    """
    Writes experiment artifacts (CSV reports, JSON sidecars, graph documents)
    atomically under a file lock so concurrent runs never leave partial files.
    """

    def __init__(self, base_dir='.'):
        self.base_dir = base_dir
        self.logger = logging.getLogger('ArtifactStore')
        try:
            os.makedirs(self.base_dir, exist_ok=True)
        except OSError as e:
            fallback = os.path.join(tempfile.gettempdir(), 'bop-artifacts')
            os.makedirs(fallback, exist_ok=True)
            self.logger.warning("Artifact dir %s not writeable (%s); falling back to %s",
                                self.base_dir, e, fallback)
            self.base_dir = fallback

    def resolve(self, filename):
        """Absolute paths are kept; relative ones live under base_dir"""
        if os.path.isabs(filename):
            return filename
        return os.path.join(self.base_dir, filename)

    @contextlib.contextmanager
    def _file_lock(self, filepath):
        lock_path = filepath + '.lock'
        with open(lock_path, 'w') as lock_file:
            fcntl.flock(lock_file.fileno(), fcntl.LOCK_EX)
            try:
                yield
            finally:
                fcntl.flock(lock_file.fileno(), fcntl.LOCK_UN)
                try:
                    os.unlink(lock_path)
                except OSError:
                    pass

    def _atomic_write_text(self, filepath, text):
        dir_path = os.path.dirname(filepath) or '.'
        os.makedirs(dir_path, exist_ok=True)

        # Temporary file in the same directory so the rename stays atomic
        temp_fd, temp_path = tempfile.mkstemp(dir=dir_path, suffix='.tmp')
        try:
            with os.fdopen(temp_fd, 'w', encoding='utf-8', newline='') as f:
                f.write(text)
                f.flush()
                os.fsync(f.fileno())
            os.rename(temp_path, filepath)
        except Exception:
            try:
                os.unlink(temp_path)
            except OSError:
                pass
            raise

    def write_text(self, filename, text):
        filepath = self.resolve(filename)
        os.makedirs(os.path.dirname(filepath) or '.', exist_ok=True)
        try:
            with self._file_lock(filepath):
                self._atomic_write_text(filepath, text)
        except Exception as e:
            self.logger.error(f"Failed to write artifact {filepath}: {e}")
            raise
        self.logger.info(f"Artifact written: {filepath}")
        return filepath

    def write_json(self, filename, data):
        text = json.dumps(data, indent=2, ensure_ascii=False, sort_keys=True) + '\n'
        return self.write_text(filename, text)

    def write_csv(self, filename, header, rows):
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator='\n')
        writer.writerow(header)
        writer.writerows(rows)
        return self.write_text(filename, buffer.getvalue())

    def read_json(self, filename):
        filepath = self.resolve(filename)
        with open(filepath, 'r', encoding='utf-8') as f:
            return json.load(f)

    def read_csv(self, filename):
        """Return (header, rows) of a CSV artifact"""
        filepath = self.resolve(filename)
        with open(filepath, 'r', encoding='utf-8', newline='') as f:
            reader = csv.reader(f)
            header = next(reader, [])
            return header, [row for row in reader]

    def exists(self, filename):
        return os.path.exists(self.resolve(filename))

#!/usr/bin/env python3

"""
Code version provenance for experiment sidecars.
Uses git when the checkout has one, otherwise a VERSION file.
"""

import os
import shutil
import subprocess
import logging

UNKNOWN = "unknown"


class VersionManager:
    """Resolves the version of the code that produced an artifact"""

    def __init__(self, app_dir=None):
        self.app_dir = app_dir or os.path.dirname(os.path.abspath(__file__))
        self.logger = logging.getLogger('VersionManager')
        self.git_cmd = shutil.which('git')

    def _git(self, *args):
        try:
            result = subprocess.run([self.git_cmd, *args], cwd=self.app_dir,
                                    capture_output=True, text=True, timeout=10)
        except (subprocess.TimeoutExpired, FileNotFoundError, OSError) as e:
            self.logger.debug(f"git {' '.join(args)} failed: {e}")
            return None
        return result.stdout.strip() if result.returncode == 0 else None

    def get_git_version(self):
        """Version from git, or None outside a git checkout"""
        if not self.git_cmd or not os.path.isdir(os.path.join(self.app_dir, '.git')):
            return None

        commit_hash = self._git('rev-parse', '--short', 'HEAD') or UNKNOWN
        describe = self._git('describe', '--tags', '--dirty', '--always') or commit_hash
        return {
            "version": describe,
            "commit_hash": commit_hash,
        }

    def get_file_version(self):
        version_file = os.path.join(self.app_dir, "VERSION")
        try:
            if os.path.exists(version_file):
                with open(version_file, 'r') as f:
                    return f.read().strip() or None
        except OSError as e:
            self.logger.error(f"Error reading VERSION file: {e}")
        return None

    def get_version_info(self):
        info = self.get_git_version() or {"version": UNKNOWN, "commit_hash": UNKNOWN}
        file_version = self.get_file_version()
        if file_version:
            if info["version"] == UNKNOWN:
                info["version"] = file_version
            else:
                info["file_version"] = file_version
        return info


version_manager = VersionManager()


def get_current_version():
    """Current code version string"""
    return version_manager.get_version_info()["version"]

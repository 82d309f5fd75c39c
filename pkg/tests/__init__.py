#!/usr/bin/env python3
"""
adsorbkit Test Suite

Unit tests per package under ``unit/``; CLI, worker-process and
end-to-end training runs under ``integration/``.
"""

#!/usr/bin/env python3
"""
Integration tests package for adsorbkit.

Contains end-to-end tests of the CLI, spawned training ranks and resumed runs.
"""

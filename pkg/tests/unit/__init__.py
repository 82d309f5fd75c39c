#!/usr/bin/env python3
"""
Unit tests package for adsorbkit.

Contains isolated, fast-running tests that verify individual components.
"""

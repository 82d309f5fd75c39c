"""Tests for layered adsorbkit settings."""

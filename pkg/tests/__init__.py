"""Tests for retail-feedback-loop."""

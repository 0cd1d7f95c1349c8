"""Tests for the practicesim package."""

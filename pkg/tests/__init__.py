"""Tests for the Gutenberg Downloader."""

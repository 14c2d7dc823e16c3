"""Unit tests for rabi_qst."""

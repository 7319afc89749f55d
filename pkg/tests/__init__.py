"""Test suite for the dualgraph toolkit."""

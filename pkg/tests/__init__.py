"""Test suite for the QSAT toolkit."""

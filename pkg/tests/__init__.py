"""Tests module."""
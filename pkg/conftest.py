"""
Pytest configuration for the dynamics test-suite.
"""
import os
import django

# Configure Django settings before running tests
os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'core.test_settings')

# Setup Django
django.setup()

# tests/models/__init__.py

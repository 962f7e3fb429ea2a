import os

SCHEMA_DIR = os.path.dirname(os.path.abspath(__file__))

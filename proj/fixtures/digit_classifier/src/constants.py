import os

_PROJECT_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))

MODEL_DIGIT_RECOGNITION_PATH = os.path.join(_PROJECT_ROOT, "model", "digits.json")

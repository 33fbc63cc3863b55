import numpy as np


def make_test_set(n: int = 100):
    """Synthetic digit set: image i renders label i % 10 as a flat intensity."""
    labels = np.arange(n, dtype=int) % 10
    images = np.zeros((n, 28, 28), dtype=np.uint8)
    for i, label in enumerate(labels):
        images[i, :, :] = label * 25 + 5
    return images, labels

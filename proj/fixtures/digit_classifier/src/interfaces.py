class IClassifyDigits:
    """Callable contract: images shaped (n, 28, 28) or (n, 784) -> int labels."""

    def __call__(self, images):
        raise NotImplementedError

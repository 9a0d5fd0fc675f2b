"""Slow, obviously-correct reference implementations used only by tests."""
import numpy as np


def naive_convolve(image, kernel):
    """psi(r, c) = sum_{dy, dx} I(r - dy, c - dx) * G(dy, dx), zero outside the image."""
    image = np.asarray(image)
    kernel = np.asarray(kernel)
    h, w = image.shape
    ks, kt = kernel.shape
    hs, ht = (ks - 1) // 2, (kt - 1) // 2
    out = np.zeros((h, w), dtype=complex)
    for r in range(h):
        for c in range(w):
            acc = 0j
            for dy in range(-hs, hs + 1):
                for dx in range(-ht, ht + 1):
                    rr, cc = r - dy, c - dx
                    if 0 <= rr < h and 0 <= cc < w:
                        acc += image[rr, cc] * kernel[dy + hs, dx + ht]
            out[r, c] = acc
    return out


def sort_all_top_k(distances, k):
    """Rank every entry by (distance, insertion position) with a plain sort."""
    order = sorted(range(len(distances)), key=lambda i: (distances[i], i))
    return order[:k]


def naive_hamming(a_bits, b_bits):
    return sum(int(x != y) for x, y in zip(a_bits, b_bits))

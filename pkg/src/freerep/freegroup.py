"""Reduced words and sphere enumeration on the Cayley tree of a free group.

Letters are small integers: generator ``i`` is the letter ``2*i`` and its
inverse is ``2*i + 1``, so the involution is a single bit flip.  Words are
tuples of letters containing no adjacent cancelling pair; the empty tuple is
the identity.
"""

import string


def inv(letter):
    """Inverse letter under the bit-flip pairing."""
    return letter ^ 1


def inverse(word):
    """Inverse of a reduced word (reversed letters, each inverted)."""
    return tuple(c ^ 1 for c in reversed(word))


def is_reduced(word):
    """True iff no adjacent pair of letters cancels."""
    return all(word[i] ^ 1 != word[i + 1] for i in range(len(word) - 1))


def multiply(x, y):
    """Product of two reduced words, cancelling across the boundary.

    Parameters
    ----------
    x, y : tuple of int
        Reduced words over a common alphabet.

    Returns
    -------
    tuple of int
        The reduced word of ``x·y``; its length is at most ``|x| + |y|``.
    """
    i = len(x)
    j = 0
    while i > 0 and j < len(y) and x[i - 1] == y[j] ^ 1:
        i -= 1
        j += 1
    return x[:i] + y[j:]


def distance(x, y):
    """Tree distance ``|x⁻¹y|`` between two vertices."""
    return len(multiply(inverse(x), y))


def in_cone(x, y):
    """True iff the reduced word ``y`` has ``x`` as a prefix."""
    return y[: len(x)] == x


def in_halftree(x, xa, y):
    """Membership of ``y`` in the half-tree of the edge ``(x, xa)``.

    The half-tree contains the vertices strictly closer to ``xa`` than to
    ``x``.  When ``xa`` descends from ``x`` this is the cone at ``xa``;
    when it ascends it is the complement of the cone at ``x``.

    Raises
    ------
    ValueError
        If ``x`` and ``xa`` are not adjacent vertices.
    """
    if distance(x, xa) != 1:
        raise ValueError("half-tree requires adjacent vertices")
    return distance(y, xa) < distance(y, x)


class Alphabet:
    """The ``2k`` letters of a free group of rank ``k``, with names.

    Parameters
    ----------
    k : int
        Number of generators, at least 2.
    generator_names : sequence of str, optional
        Names for the generators; defaults to ``a, b, c, ...``.  The
        inverse of generator ``g`` is rendered ``g^-1``.
    """

    def __init__(self, k, generator_names=None):
        if k < 2:
            raise ValueError("rank must be at least 2")
        if generator_names is None:
            if k > len(string.ascii_lowercase):
                raise ValueError("provide explicit names for rank > 26")
            generator_names = string.ascii_lowercase[:k]
        if len(generator_names) != k or len(set(generator_names)) != k:
            raise ValueError("need %d distinct generator names" % k)
        self.k = k
        self.size = 2 * k
        self.generator_names = tuple(generator_names)
        self.names = tuple(
            name + suffix for name in generator_names for suffix in ("", "^-1")
        )
        self._index = {name: c for c, name in enumerate(self.names)}

    def __eq__(self, other):
        return isinstance(other, Alphabet) and self.names == other.names

    def __repr__(self):
        return "Alphabet(k=%d)" % self.k

    @property
    def letters(self):
        return range(self.size)

    @property
    def generators(self):
        return range(0, self.size, 2)

    def letter_name(self, c):
        return self.names[c]

    def parse_letter(self, name):
        try:
            return self._index[name]
        except KeyError:
            raise ValueError("unknown letter %r" % name) from None

    def word_str(self, word):
        """Render a word as dot-separated letter names, ``e`` for identity."""
        if not word:
            return "e"
        return ".".join(self.names[c] for c in word)

    def parse_word(self, text):
        """Parse the output of :meth:`word_str`; the result must be reduced."""
        text = text.strip()
        if text in ("", "e"):
            return ()
        word = tuple(self.parse_letter(tok) for tok in text.split("."))
        if not is_reduced(word):
            raise ValueError("word %r is not reduced" % text)
        return word

    def check_word(self, word):
        """Raise unless ``word`` is a reduced word over this alphabet."""
        if any(not 0 <= c < self.size for c in word):
            raise ValueError("mismatched alphabets: letter out of range")
        if not is_reduced(word):
            raise ValueError("word is not reduced")

    def multiply(self, x, y):
        """Checked reduced product; see module-level :func:`multiply`."""
        self.check_word(x)
        self.check_word(y)
        return multiply(x, y)

    def _extend(self, prefix, depth):
        if depth == 0:
            yield prefix
            return
        banned = prefix[-1] ^ 1 if prefix else -1
        for c in range(self.size):
            if c != banned:
                yield from self._extend(prefix + (c,), depth - 1)

    def sphere(self, n):
        """Iterate all reduced words of length ``n``, streaming.

        Yields ``2k(2k−1)^(n−1)`` words for ``n ≥ 1`` and the identity alone
        for ``n = 0``, in depth-first lexicographic order.
        """
        if n < 0:
            raise ValueError("sphere radius must be nonnegative")
        yield from self._extend((), n)

    def cone_sphere(self, x, n):
        """Iterate the length-``n`` words lying in the cone at ``x``.

        Empty for ``n < |x|``; ``cone_sphere(e, n)`` is ``sphere(n)``.
        """
        self.check_word(x)
        if n >= len(x):
            yield from self._extend(x, n - len(x))

    def random_word(self, rng, n):
        """Uniform random reduced word of length ``n``."""
        word = []
        banned = -1
        for _ in range(n):
            c = int(rng.integers(self.size - (banned >= 0)))
            if banned >= 0 and c >= banned:
                c += 1
            word.append(c)
            banned = c ^ 1
        return tuple(word)

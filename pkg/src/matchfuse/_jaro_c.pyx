# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled Jaro-Winkler similarity kernel."""

from libc.stdlib cimport free, malloc


cpdef double jaro(str s1, str s2):
    cdef Py_ssize_t len1 = len(s1)
    cdef Py_ssize_t len2 = len(s2)
    if len1 == 0 and len2 == 0:
        return 1.0
    if len1 == 0 or len2 == 0:
        return 0.0

    cdef Py_ssize_t window = (len1 if len1 > len2 else len2) // 2 - 1
    if window < 0:
        window = 0

    cdef char *match1 = <char *> malloc(len1)
    cdef char *match2 = <char *> malloc(len2)
    if match1 == NULL or match2 == NULL:
        if match1 != NULL:
            free(match1)
        if match2 != NULL:
            free(match2)
        raise MemoryError()
    cdef Py_ssize_t i, j, lo, hi
    cdef Py_ssize_t transpositions = 0
    for i in range(len1):
        match1[i] = 0
    for j in range(len2):
        match2[j] = 0

    cdef Py_ssize_t matches = 0
    cdef Py_UCS4 c
    try:
        for i in range(len1):
            lo = i - window if i - window > 0 else 0
            hi = i + window + 1 if i + window + 1 < len2 else len2
            c = s1[i]
            for j in range(lo, hi):
                if not match2[j] and c == <Py_UCS4> s2[j]:
                    match1[i] = 1
                    match2[j] = 1
                    matches += 1
                    break
        if matches == 0:
            return 0.0

        j = 0
        for i in range(len1):
            if match1[i]:
                while not match2[j]:
                    j += 1
                if <Py_UCS4> s1[i] != <Py_UCS4> s2[j]:
                    transpositions += 1
                j += 1
        transpositions //= 2

        return ((<double> matches) / len1 + (<double> matches) / len2
                + (<double> (matches - transpositions)) / matches) / 3.0
    finally:
        free(match1)
        free(match2)


cpdef double jaro_winkler(str s1, str s2, double prefix_weight=0.1):
    cdef double sim = jaro(s1, s2)
    cdef Py_ssize_t limit = 4
    if len(s1) < limit:
        limit = len(s1)
    if len(s2) < limit:
        limit = len(s2)
    cdef Py_ssize_t prefix = 0
    cdef Py_ssize_t i
    for i in range(limit):
        if <Py_UCS4> s1[i] != <Py_UCS4> s2[i]:
            break
        prefix += 1
    return sim + prefix * prefix_weight * (1.0 - sim)

# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: block packing, rank/select, trie search, rank-run buffers,
multiway merge and interleave. Mirrors ``_pykernels`` exactly."""

from libc.stdint cimport int64_t, uint8_t, uint64_t
from libc.stdlib cimport free, malloc, qsort, realloc
from libc.string cimport memcpy, memset

import numpy as np

from .errors import CorruptionError, MalformedDataError

BACKEND = "compiled"

cdef enum:
    BLOCK_SIZE = 64
    SIGMA = 6
    LONG_BASE = 246
    SHORT_LIMIT = 41

cdef Py_ssize_t CHUNK = 1 << 16


# --- growable buffers -------------------------------------------------------

cdef struct ByteBuf:
    uint8_t* data
    Py_ssize_t size
    Py_ssize_t cap

cdef struct I64Buf:
    int64_t* data
    Py_ssize_t size
    Py_ssize_t cap

cdef struct Pair:
    int64_t head
    int64_t length


cdef int bytebuf_reserve(ByteBuf* b, Py_ssize_t extra) except -1 nogil:
    cdef Py_ssize_t need = b.size + extra
    cdef Py_ssize_t cap
    cdef uint8_t* data
    if need <= b.cap:
        return 0
    cap = b.cap * 2 if b.cap else 256
    while cap < need:
        cap *= 2
    data = <uint8_t*> realloc(b.data, cap)
    if data == NULL:
        with gil:
            raise MemoryError()
    b.data = data
    b.cap = cap
    return 0


cdef int i64buf_reserve(I64Buf* b, Py_ssize_t extra) except -1 nogil:
    cdef Py_ssize_t need = b.size + extra
    cdef Py_ssize_t cap
    cdef int64_t* data
    if need <= b.cap:
        return 0
    cap = b.cap * 2 if b.cap else 64
    while cap < need:
        cap *= 2
    data = <int64_t*> realloc(b.data, cap * sizeof(int64_t))
    if data == NULL:
        with gil:
            raise MemoryError()
    b.data = data
    b.cap = cap
    return 0


cdef inline int put_varint(ByteBuf* b, uint64_t v) except -1 nogil:
    if b.size + 10 > b.cap:
        bytebuf_reserve(b, 10)
    while v >= 0x80:
        b.data[b.size] = <uint8_t> ((v & 0x7F) | 0x80)
        b.size += 1
        v >>= 7
    b.data[b.size] = <uint8_t> v
    b.size += 1
    return 0


cdef inline int get_varint(const uint8_t* p, Py_ssize_t end, Py_ssize_t* pos, uint64_t* out) noexcept nogil:
    """0 on success, -1 when the input ends inside the varint."""
    cdef uint64_t value = 0
    cdef int shift = 0
    cdef uint8_t byte
    cdef Py_ssize_t i = pos[0]
    while True:
        if i >= end or shift > 63:
            return -1
        byte = p[i]
        i += 1
        value |= (<uint64_t> (byte & 0x7F)) << shift
        shift += 7
        if byte < 0x80:
            break
    pos[0] = i
    out[0] = value
    return 0


cdef inline int varint_len(uint64_t v) noexcept nogil:
    cdef int size = 1
    while v >= 0x80:
        v >>= 7
        size += 1
    return size


cdef inline int decode_run(const uint8_t* p, Py_ssize_t end, Py_ssize_t* pos,
                           int* sym, int64_t* length) noexcept nogil:
    """0 on success, -1 on truncation, -2 on an invalid header byte."""
    cdef uint8_t byte
    cdef uint64_t extra
    if pos[0] >= end:
        return -1
    byte = p[pos[0]]
    pos[0] += 1
    if byte < LONG_BASE:
        sym[0] = byte % SIGMA
        length[0] = byte // SIGMA + 1
        return 0
    sym[0] = byte - LONG_BASE
    if sym[0] >= SIGMA:
        return -2
    if get_varint(p, end, pos, &extra) < 0:
        return -1
    length[0] = <int64_t> extra + SHORT_LIMIT + 1
    return 0


# --- block writer -----------------------------------------------------------

cdef class BlockWriter:
    """Packs runs into 64-byte blocks, coalescing adjacent equal symbols."""

    cdef ByteBuf blocks
    cdef I64Buf offsets
    cdef I64Buf ranks
    cdef int64_t counts[SIGMA]
    cdef int64_t total
    cdef Py_ssize_t used
    cdef int sym
    cdef int64_t pending

    def __cinit__(self):
        memset(&self.blocks, 0, sizeof(ByteBuf))
        memset(&self.offsets, 0, sizeof(I64Buf))
        memset(&self.ranks, 0, sizeof(I64Buf))
        memset(self.counts, 0, sizeof(self.counts))
        self.total = 0
        self.used = BLOCK_SIZE
        self.sym = -1
        self.pending = 0

    def __dealloc__(self):
        free(self.blocks.data)
        free(self.offsets.data)
        free(self.ranks.data)

    cdef int write(self, int sym, int64_t length) except -1 nogil:
        cdef Py_ssize_t space, start
        cdef int64_t piece, extra
        cdef int size, c
        cdef uint8_t* out
        while length > 0:
            space = BLOCK_SIZE - self.used
            if space == 0:
                bytebuf_reserve(&self.blocks, BLOCK_SIZE)
                memset(self.blocks.data + self.blocks.size, 0, BLOCK_SIZE)
                self.blocks.size += BLOCK_SIZE
                i64buf_reserve(&self.offsets, 1)
                self.offsets.data[self.offsets.size] = self.total
                self.offsets.size += 1
                i64buf_reserve(&self.ranks, SIGMA)
                for c in range(SIGMA):
                    self.ranks.data[self.ranks.size + c] = self.counts[c]
                self.ranks.size += SIGMA
                self.used = 0
                space = BLOCK_SIZE
            if length <= SHORT_LIMIT:
                size = 1
            else:
                size = 1 + varint_len(<uint64_t> (length - SHORT_LIMIT - 1))
            if size <= space:
                piece = length
            elif space == 1:
                piece = SHORT_LIMIT
            else:
                piece = SHORT_LIMIT + ((<int64_t> 1) << (7 * (space - 1)))
            start = self.blocks.size - BLOCK_SIZE + self.used
            out = self.blocks.data + start
            if piece <= SHORT_LIMIT:
                out[0] = <uint8_t> (SIGMA * (piece - 1) + sym)
                self.used += 1
            else:
                out[0] = <uint8_t> (LONG_BASE + sym)
                self.used = self._put_extra(start, piece - SHORT_LIMIT - 1)
            self.counts[sym] += piece
            self.total += piece
            length -= piece
        return 0

    cdef Py_ssize_t _put_extra(self, Py_ssize_t start, int64_t extra) noexcept nogil:
        # start points at the header byte; varint follows it.
        cdef Py_ssize_t block_start = self.blocks.size - BLOCK_SIZE
        cdef Py_ssize_t i = start + 1
        cdef uint64_t v = <uint64_t> extra
        while v >= 0x80:
            self.blocks.data[i] = <uint8_t> ((v & 0x7F) | 0x80)
            v >>= 7
            i += 1
        self.blocks.data[i] = <uint8_t> v
        i += 1
        return i - block_start

    cdef int c_add(self, int sym, int64_t length) except -1 nogil:
        if length <= 0:
            return 0
        if sym == self.sym:
            self.pending += length
            return 0
        if self.pending:
            self.write(self.sym, self.pending)
        self.sym = sym
        self.pending = length
        return 0

    def add(self, int sym, int64_t length):
        self.c_add(sym, length)

    def add_runs(self, syms, lengths):
        cdef const uint8_t[::1] s = np.ascontiguousarray(syms, dtype=np.uint8)
        cdef const int64_t[::1] l = np.ascontiguousarray(lengths, dtype=np.int64)
        cdef Py_ssize_t i, k = s.shape[0]
        if l.shape[0] != k:
            raise ValueError("symbol and length arrays differ in size")
        with nogil:
            for i in range(k):
                self.c_add(s[i], l[i])

    def reserve(self, Py_ssize_t nbytes):
        """Capacity hint for a payload of about ``nbytes`` bytes."""
        cdef Py_ssize_t nb = nbytes // BLOCK_SIZE + 1
        bytebuf_reserve(&self.blocks, nb * BLOCK_SIZE - self.blocks.size)
        i64buf_reserve(&self.offsets, nb - self.offsets.size)
        i64buf_reserve(&self.ranks, nb * SIGMA - self.ranks.size)

    def finish(self):
        """Return ``(blocks, offsets, ranks, counts)`` and release the write buffers."""
        if self.pending:
            self.write(self.sym, self.pending)
            self.sym = -1
            self.pending = 0
        nb = self.offsets.size
        blocks = (<char*> self.blocks.data)[:self.blocks.size] if self.blocks.size else b""
        offsets = np.empty(nb, dtype=np.int64)
        ranks = np.empty((nb, SIGMA), dtype=np.int64)
        cdef int64_t[::1] ov = offsets
        cdef int64_t[:, ::1] rv = ranks
        if nb:
            memcpy(&ov[0], self.offsets.data, nb * sizeof(int64_t))
            memcpy(&rv[0, 0], self.ranks.data, nb * SIGMA * sizeof(int64_t))
        counts = np.array([self.counts[c] for c in range(SIGMA)], dtype=np.int64)
        free(self.blocks.data)
        free(self.offsets.data)
        free(self.ranks.data)
        memset(&self.blocks, 0, sizeof(ByteBuf))
        memset(&self.offsets, 0, sizeof(I64Buf))
        memset(&self.ranks, 0, sizeof(I64Buf))
        self.used = BLOCK_SIZE
        return blocks, offsets, ranks, counts


# --- core queries -----------------------------------------------------------

cdef class BwtCore:
    """Rank/select/access over the 64-byte block layout."""

    cdef readonly bytes blocks
    cdef readonly Py_ssize_t nblocks
    cdef readonly int64_t n
    cdef object _offsets_arr
    cdef object _ranks_arr
    cdef const uint8_t* bp
    cdef const int64_t* off
    cdef const int64_t* rk

    def __cinit__(self, blocks, offsets, ranks, n):
        self.blocks = bytes(blocks)
        self._offsets_arr = np.ascontiguousarray(offsets, dtype=np.int64)
        self._ranks_arr = np.ascontiguousarray(np.asarray(ranks, dtype=np.int64).reshape(-1, SIGMA))
        self.nblocks = self._offsets_arr.shape[0]
        self.n = n
        if self._ranks_arr.shape[0] != self.nblocks:
            raise ValueError("block index arrays differ in length")
        if len(self.blocks) != self.nblocks * BLOCK_SIZE:
            raise ValueError("blocks payload size does not match the block count")
        cdef const int64_t[::1] ov
        cdef const int64_t[:, ::1] rv
        self.bp = <const uint8_t*> (<const char*> self.blocks)
        if self.nblocks:
            ov = self._offsets_arr
            rv = self._ranks_arr
            self.off = &ov[0]
            self.rk = &rv[0, 0]
        else:
            self.off = NULL
            self.rk = NULL

    cdef inline Py_ssize_t find(self, int64_t i) noexcept nogil:
        cdef Py_ssize_t lo = 0, hi = self.nblocks - 1, mid
        while lo < hi:
            mid = (lo + hi + 1) >> 1
            if self.off[mid] < i:
                lo = mid
            else:
                hi = mid - 1
        return lo

    cdef inline int64_t block_end(self, Py_ssize_t b) noexcept nogil:
        if b + 1 < self.nblocks:
            return self.off[b + 1]
        return self.n

    cdef void c_rank_all(self, int64_t i, int64_t* out) noexcept nogil:
        cdef Py_ssize_t b, p, end
        cdef int64_t pos, length
        cdef int sym, c
        if i <= 0:
            for c in range(SIGMA):
                out[c] = 0
            return
        b = self.find(i)
        for c in range(SIGMA):
            out[c] = self.rk[b * SIGMA + c]
        pos = self.off[b]
        p = b * BLOCK_SIZE
        end = p + BLOCK_SIZE
        while decode_run(self.bp, end, &p, &sym, &length) == 0:
            if pos + length >= i:
                out[sym] += i - pos
                return
            out[sym] += length
            pos += length

    cdef int64_t c_rank(self, int64_t i, int c) noexcept nogil:
        cdef Py_ssize_t b, p, end
        cdef int64_t pos, length, count
        cdef int sym
        if i <= 0:
            return 0
        b = self.find(i)
        count = self.rk[b * SIGMA + c]
        pos = self.off[b]
        p = b * BLOCK_SIZE
        end = p + BLOCK_SIZE
        while decode_run(self.bp, end, &p, &sym, &length) == 0:
            if pos + length >= i:
                if sym == c:
                    count += i - pos
                return count
            if sym == c:
                count += length
            pos += length
        return count

    cdef int c_access_rank(self, int64_t i, int64_t* rank) noexcept nogil:
        """Symbol at i; stores rank(i, symbol) in ``rank``. -1 if not found."""
        cdef Py_ssize_t b, p, end
        cdef int64_t pos, length
        cdef int64_t counts[SIGMA]
        cdef int sym, c
        b = self.find(i)
        for c in range(SIGMA):
            counts[c] = self.rk[b * SIGMA + c]
        pos = self.off[b]
        p = b * BLOCK_SIZE
        end = p + BLOCK_SIZE
        while decode_run(self.bp, end, &p, &sym, &length) == 0:
            if pos + length >= i:
                rank[0] = counts[sym] + i - pos
                return sym
            counts[sym] += length
            pos += length
        return -1

    cdef int64_t c_select(self, int64_t j, int c) noexcept nogil:
        cdef Py_ssize_t lo = 0, hi = self.nblocks - 1, mid, b, p, end
        cdef int64_t count, pos, length
        cdef int sym
        while lo < hi:
            mid = (lo + hi + 1) >> 1
            if self.rk[mid * SIGMA + c] < j:
                lo = mid
            else:
                hi = mid - 1
        b = lo
        count = self.rk[b * SIGMA + c]
        pos = self.off[b]
        p = b * BLOCK_SIZE
        end = p + BLOCK_SIZE
        while decode_run(self.bp, end, &p, &sym, &length) == 0:
            if sym == c:
                if count + length >= j:
                    return pos + j - count
                count += length
            pos += length
        return -1

    def access(self, int64_t i):
        cdef int64_t r
        cdef int sym = self.c_access_rank(i, &r)
        if sym < 0:
            raise IndexError(i)
        return sym

    def access_rank(self, int64_t i):
        cdef int64_t r
        cdef int sym = self.c_access_rank(i, &r)
        if sym < 0:
            raise IndexError(i)
        return sym, r

    def rank(self, int64_t i, int c):
        return self.c_rank(i, c)

    def rank_all(self, int64_t i):
        cdef int64_t out[SIGMA]
        self.c_rank_all(i, out)
        return [out[0], out[1], out[2], out[3], out[4], out[5]]

    def select(self, int64_t j, int c):
        cdef int64_t pos = self.c_select(j, c)
        if pos < 0:
            raise IndexError(j)
        return pos

    def access_batch(self, positions):
        cdef const int64_t[::1] pv = np.ascontiguousarray(positions, dtype=np.int64)
        out = np.empty(pv.shape[0], dtype=np.uint8)
        cdef uint8_t[::1] ov = out
        cdef Py_ssize_t k
        cdef int64_t r
        with nogil:
            for k in range(pv.shape[0]):
                ov[k] = <uint8_t> self.c_access_rank(pv[k], &r)
        return out

    def rank_all_batch(self, positions):
        cdef const int64_t[::1] pv = np.ascontiguousarray(positions, dtype=np.int64)
        out = np.empty((pv.shape[0], SIGMA), dtype=np.int64)
        cdef int64_t[:, ::1] ov = out
        cdef Py_ssize_t k
        with nogil:
            for k in range(pv.shape[0]):
                self.c_rank_all(pv[k], &ov[k, 0])
        return out

    def select_batch(self, js, int c):
        cdef const int64_t[::1] jv = np.ascontiguousarray(js, dtype=np.int64)
        out = np.empty(jv.shape[0], dtype=np.int64)
        cdef int64_t[::1] ov = out
        cdef Py_ssize_t k
        with nogil:
            for k in range(jv.shape[0]):
                ov[k] = self.c_select(jv[k], c)
        return out

    def block_runs(self):
        """Per-block run pieces in order, without coalescing."""
        cdef Py_ssize_t b, p, end
        cdef int64_t done, want, length
        cdef int sym
        for b in range(self.nblocks):
            want = self.block_end(b) - self.off[b]
            done = 0
            p = b * BLOCK_SIZE
            end = p + BLOCK_SIZE
            while done < want:
                if decode_run(self.bp, end, &p, &sym, &length) != 0:
                    raise CorruptionError(f"block {b} is malformed")
                done += length
                yield sym, length

    def count_runs(self):
        """Number of maximal runs, counting runs split across blocks once."""
        cdef Py_ssize_t b, p, end
        cdef int64_t done, want, length, total = 0
        cdef int sym, last = -1, rc = 0
        with nogil:
            for b in range(self.nblocks):
                want = self.block_end(b) - self.off[b]
                done = 0
                p = b * BLOCK_SIZE
                end = p + BLOCK_SIZE
                while done < want:
                    if decode_run(self.bp, end, &p, &sym, &length) != 0:
                        rc = -1
                        break
                    done += length
                    if sym != last:
                        total += 1
                        last = sym
                if rc:
                    break
        if rc:
            raise CorruptionError("malformed block while counting runs")
        return total

    def runs(self):
        cdef I64Buf syms, lens
        cdef Py_ssize_t b, p, end
        cdef int64_t done, want, length
        cdef int sym, last = -1, rc = 0
        cdef uint8_t[::1] sv
        cdef int64_t[::1] lv
        memset(&syms, 0, sizeof(I64Buf))
        memset(&lens, 0, sizeof(I64Buf))
        try:
            with nogil:
                for b in range(self.nblocks):
                    want = self.block_end(b) - self.off[b]
                    done = 0
                    p = b * BLOCK_SIZE
                    end = p + BLOCK_SIZE
                    while done < want:
                        if decode_run(self.bp, end, &p, &sym, &length) != 0:
                            rc = -1
                            break
                        done += length
                        if sym == last:
                            lens.data[lens.size - 1] += length
                        else:
                            i64buf_reserve(&syms, 1)
                            i64buf_reserve(&lens, 1)
                            syms.data[syms.size] = sym
                            lens.data[lens.size] = length
                            syms.size += 1
                            lens.size += 1
                            last = sym
                    if rc:
                        break
            if rc:
                raise CorruptionError("malformed block while iterating runs")
            out_s = np.empty(syms.size, dtype=np.uint8)
            out_l = np.empty(lens.size, dtype=np.int64)
            sv = out_s
            lv = out_l
            for b in range(syms.size):
                sv[b] = <uint8_t> syms.data[b]
                lv[b] = lens.data[b]
            return out_s, out_l
        finally:
            free(syms.data)
            free(lens.data)

    def symbols(self):
        out = np.empty(self.n, dtype=np.uint8)
        cdef uint8_t[::1] ov = out
        cdef Py_ssize_t b, p, end
        cdef int64_t done, want, length, pos = 0, k
        cdef int sym, rc = 0
        with nogil:
            for b in range(self.nblocks):
                want = self.block_end(b) - self.off[b]
                done = 0
                p = b * BLOCK_SIZE
                end = p + BLOCK_SIZE
                while done < want:
                    if decode_run(self.bp, end, &p, &sym, &length) != 0 or pos + length > self.n:
                        rc = -1
                        break
                    for k in range(length):
                        ov[pos + k] = <uint8_t> sym
                    pos += length
                    done += length
                if rc:
                    break
        if rc:
            raise CorruptionError("malformed block while expanding symbols")
        return out

    def census(self):
        """Per-block symbol counts; raises CorruptionError on malformed blocks."""
        out = np.zeros((self.nblocks, SIGMA), dtype=np.int64)
        cdef int64_t[:, ::1] ov = out
        cdef Py_ssize_t b, p, end
        cdef int64_t done, want, length
        cdef int sym, prev, rc
        for b in range(self.nblocks):
            want = self.block_end(b) - self.off[b]
            if want <= 0:
                raise CorruptionError(f"block {b} has non-positive length")
            done = 0
            prev = -1
            p = b * BLOCK_SIZE
            end = p + BLOCK_SIZE
            while done < want:
                rc = decode_run(self.bp, end, &p, &sym, &length)
                if rc != 0:
                    raise CorruptionError(f"block {b}: malformed run code")
                if sym == prev:
                    raise CorruptionError(f"block {b} holds adjacent runs of one symbol")
                prev = sym
                ov[b, sym] += length
                done += length
            if done != want:
                raise CorruptionError(f"block {b} decodes to {done} symbols, expected {want}")
        return out


# --- rank-run buffers -------------------------------------------------------

cdef int cmp_pair(const void* a, const void* b) noexcept nogil:
    cdef int64_t x = (<const Pair*> a).head
    cdef int64_t y = (<const Pair*> b).head
    return (x > y) - (x < y)


cdef struct Reader:
    const uint8_t* p
    Py_ssize_t pos
    Py_ssize_t end
    int64_t head
    int64_t count


cdef inline int reader_next(Reader* r, int64_t* h, int64_t* l) noexcept nogil:
    """1 when a run was read, 0 at the end, -1 on malformed input."""
    cdef uint64_t d, v
    if r.pos >= r.end:
        return 0
    if get_varint(r.p, r.end, &r.pos, &d) < 0:
        return -1
    if get_varint(r.p, r.end, &r.pos, &v) < 0:
        return -1
    if v == 0 or (r.count > 0 and d == 0):
        return -1
    r.head += <int64_t> d
    r.count += 1
    h[0] = r.head
    l[0] = <int64_t> v
    return 1


cdef struct PayloadWriter:
    ByteBuf* out
    int64_t prev
    int64_t ph
    int64_t pl
    int64_t runs
    int64_t total


cdef inline void pw_init(PayloadWriter* w, ByteBuf* out) noexcept nogil:
    w.out = out
    w.prev = 0
    w.ph = 0
    w.pl = 0
    w.runs = 0
    w.total = 0


cdef int pw_flush(PayloadWriter* w) except -1 nogil:
    if w.pl:
        put_varint(w.out, <uint64_t> (w.ph - w.prev))
        put_varint(w.out, <uint64_t> w.pl)
        w.prev = w.ph
        w.runs += 1
        w.total += w.pl
        w.pl = 0
    return 0


cdef inline int pw_emit(PayloadWriter* w, int64_t h, int64_t l) except -1 nogil:
    if w.pl and h == w.ph:
        w.pl += l
        return 0
    pw_flush(w)
    w.ph = h
    w.pl = l
    return 0


cdef int encode_pairs(Pair* pairs, Py_ssize_t n, ByteBuf* out, int64_t* runs, int64_t* total) except -1 nogil:
    cdef PayloadWriter w
    cdef Py_ssize_t i
    qsort(pairs, n, sizeof(Pair), cmp_pair)
    pw_init(&w, out)
    for i in range(n):
        pw_emit(&w, pairs[i].head, pairs[i].length)
    pw_flush(&w)
    runs[0] = w.runs
    total[0] = w.total
    return 0


cdef int merge_payloads(const uint8_t* p1, Py_ssize_t n1, const uint8_t* p2, Py_ssize_t n2,
                        ByteBuf* out, int64_t* runs, int64_t* total) except -1 nogil:
    """Returns 0, or 1 when either input is malformed."""
    cdef Reader r1, r2
    cdef PayloadWriter w
    cdef int64_t h1 = 0, l1 = 0, h2 = 0, l2 = 0
    cdef int s1, s2
    r1.p = p1
    r1.pos = 0
    r1.end = n1
    r1.head = 0
    r1.count = 0
    r2.p = p2
    r2.pos = 0
    r2.end = n2
    r2.head = 0
    r2.count = 0
    bytebuf_reserve(out, n1 + n2)
    pw_init(&w, out)
    s1 = reader_next(&r1, &h1, &l1)
    s2 = reader_next(&r2, &h2, &l2)
    while s1 == 1 or s2 == 1:
        if s1 < 0 or s2 < 0:
            return 1
        if s2 != 1 or (s1 == 1 and h1 <= h2):
            pw_emit(&w, h1, l1)
            s1 = reader_next(&r1, &h1, &l1)
        else:
            pw_emit(&w, h2, l2)
            s2 = reader_next(&r2, &h2, &l2)
    if s1 < 0 or s2 < 0:
        return 1
    pw_flush(&w)
    runs[0] = w.runs
    total[0] = w.total
    return 0


cdef bytes bytebuf_bytes(ByteBuf* b):
    if b.size == 0:
        return b""
    return (<char*> b.data)[:b.size]


def encode_rank_runs(heads, lengths):
    """Sort by head, coalesce equal heads, encode. Returns (payload, runs, total)."""
    cdef const int64_t[::1] hv = np.ascontiguousarray(heads, dtype=np.int64)
    cdef const int64_t[::1] lv = np.ascontiguousarray(lengths, dtype=np.int64)
    cdef Py_ssize_t i, n = hv.shape[0]
    cdef Pair* pairs
    cdef ByteBuf out
    cdef int64_t runs = 0, total = 0
    if lv.shape[0] != n:
        raise ValueError("head and length arrays differ in size")
    if n == 0:
        return b"", 0, 0
    pairs = <Pair*> malloc(n * sizeof(Pair))
    if pairs == NULL:
        raise MemoryError()
    memset(&out, 0, sizeof(ByteBuf))
    try:
        for i in range(n):
            pairs[i].head = hv[i]
            pairs[i].length = lv[i]
        with nogil:
            encode_pairs(pairs, n, &out, &runs, &total)
        return bytebuf_bytes(&out), runs, total
    finally:
        free(pairs)
        free(out.data)


def decode_rank_runs(payload):
    cdef const uint8_t[::1] pv = memoryview(payload).cast("B") if len(payload) else b"\0"
    cdef Reader r
    cdef I64Buf hs, ls
    cdef int64_t h, l
    cdef int rc
    cdef Py_ssize_t i
    cdef int64_t[::1] ho, lo
    r.p = &pv[0]
    r.pos = 0
    r.end = len(payload)
    r.head = 0
    r.count = 0
    memset(&hs, 0, sizeof(I64Buf))
    memset(&ls, 0, sizeof(I64Buf))
    try:
        while True:
            rc = reader_next(&r, &h, &l)
            if rc == 0:
                break
            if rc < 0:
                raise MalformedDataError("malformed rank-run payload")
            i64buf_reserve(&hs, 1)
            i64buf_reserve(&ls, 1)
            hs.data[hs.size] = h
            ls.data[ls.size] = l
            hs.size += 1
            ls.size += 1
        heads = np.empty(hs.size, dtype=np.int64)
        lengths = np.empty(ls.size, dtype=np.int64)
        ho = heads
        lo = lengths
        for i in range(hs.size):
            ho[i] = hs.data[i]
            lo[i] = ls.data[i]
        return heads, lengths
    finally:
        free(hs.data)
        free(ls.data)


def merge_rank_runs(first, second):
    cdef const uint8_t[::1] v1 = memoryview(first).cast("B") if len(first) else b"\0"
    cdef const uint8_t[::1] v2 = memoryview(second).cast("B") if len(second) else b"\0"
    cdef Py_ssize_t n1 = len(first), n2 = len(second)
    cdef ByteBuf out
    cdef int64_t runs = 0, total = 0
    cdef int rc
    memset(&out, 0, sizeof(ByteBuf))
    try:
        with nogil:
            rc = merge_payloads(&v1[0], n1, &v2[0], n2, &out, &runs, &total)
        if rc:
            raise MalformedDataError("malformed rank-run payload")
        return bytebuf_bytes(&out), runs, total
    finally:
        free(out.data)


# --- search -----------------------------------------------------------------

cdef class SubtreeSearch:
    """Depth-first reverse-trie search with a private run buffer and thread buffer."""

    cdef BwtCore a
    cdef BwtCore b
    cdef int64_t ca[SIGMA]
    cdef int64_t cb[SIGMA]
    cdef I64Buf stack
    cdef Pair* pairs
    cdef Py_ssize_t npairs
    cdef Py_ssize_t run_pairs
    cdef Py_ssize_t thread_bytes
    cdef ByteBuf thread
    cdef ByteBuf tmp
    cdef ByteBuf merged
    cdef int64_t thread_runs
    cdef int64_t thread_total
    cdef readonly int64_t nodes

    def __cinit__(self, BwtCore core_a, BwtCore core_b, c_a, c_b, run_pairs, thread_bytes):
        cdef int c
        self.a = core_a
        self.b = core_b
        for c in range(SIGMA):
            self.ca[c] = c_a[c]
            self.cb[c] = c_b[c]
        self.run_pairs = max(1, run_pairs)
        self.thread_bytes = max(1, thread_bytes)
        memset(&self.stack, 0, sizeof(I64Buf))
        memset(&self.thread, 0, sizeof(ByteBuf))
        memset(&self.tmp, 0, sizeof(ByteBuf))
        memset(&self.merged, 0, sizeof(ByteBuf))
        self.pairs = <Pair*> malloc(self.run_pairs * sizeof(Pair))
        if self.pairs == NULL:
            raise MemoryError()
        self.npairs = 0
        self.thread_runs = 0
        self.thread_total = 0
        self.nodes = 0

    def __dealloc__(self):
        free(self.stack.data)
        free(self.pairs)
        free(self.thread.data)
        free(self.tmp.data)
        free(self.merged.data)

    cdef inline int push_node(self, int64_t r, int64_t sp, int64_t ep) except -1 nogil:
        if self.stack.size + 3 > self.stack.cap:
            i64buf_reserve(&self.stack, 3)
        self.stack.data[self.stack.size] = r
        self.stack.data[self.stack.size + 1] = sp
        self.stack.data[self.stack.size + 2] = ep
        self.stack.size += 3
        return 0

    def push(self, int64_t rank, int64_t sp, int64_t ep):
        if sp <= ep:
            self.push_node(rank, sp, ep)

    cdef int compact(self) except -1 nogil:
        cdef int64_t runs = 0, total = 0
        cdef ByteBuf swap
        if self.npairs == 0:
            return 0
        self.tmp.size = 0
        encode_pairs(self.pairs, self.npairs, &self.tmp, &runs, &total)
        self.npairs = 0
        if self.thread_runs == 0:
            swap = self.thread
            self.thread = self.tmp
            self.tmp = swap
        else:
            self.merged.size = 0
            merge_payloads(self.thread.data, self.thread.size, self.tmp.data, self.tmp.size,
                           &self.merged, &runs, &total)
            swap = self.thread
            self.thread = self.merged
            self.merged = swap
        self.thread_runs = runs
        self.thread_total = total
        return 0

    cdef int run(self) except -1 nogil:
        cdef int64_t r, sp, ep, rkb, child
        cdef int64_t lo[SIGMA]
        cdef int64_t hi[SIGMA]
        cdef int64_t ra[SIGMA]
        cdef int c
        while self.stack.size:
            self.stack.size -= 3
            r = self.stack.data[self.stack.size]
            sp = self.stack.data[self.stack.size + 1]
            ep = self.stack.data[self.stack.size + 2]
            self.nodes += 1
            self.pairs[self.npairs].head = r
            self.pairs[self.npairs].length = ep + 1 - sp
            self.npairs += 1
            if sp == ep:
                c = self.b.c_access_rank(sp, &rkb)
                if c > 0:
                    child = self.cb[c] + rkb
                    self.push_node(self.ca[c] + self.a.c_rank(r, c), child, child)
            else:
                self.b.c_rank_all(sp - 1, lo)
                self.b.c_rank_all(ep, hi)
                self.a.c_rank_all(r, ra)
                for c in range(SIGMA - 1, 0, -1):
                    if hi[c] > lo[c]:
                        self.push_node(self.ca[c] + ra[c], self.cb[c] + lo[c] + 1, self.cb[c] + hi[c])
            if self.npairs >= self.run_pairs:
                self.compact()
                if self.thread.size >= self.thread_bytes:
                    return 1
        return 0

    cdef tuple take(self):
        out = (bytebuf_bytes(&self.thread), self.thread_runs, self.thread_total)
        self.thread.size = 0
        self.thread_runs = 0
        self.thread_total = 0
        return out

    def step(self):
        cdef int rc
        with nogil:
            rc = self.run()
        if rc == 1:
            return self.take()
        return None

    def flush(self):
        with nogil:
            self.compact()
        if self.thread_runs == 0:
            return None
        return self.take()


# --- multiway merge ---------------------------------------------------------

cdef class _Source:
    cdef object data
    cdef bytes buf
    cdef const uint8_t* p
    cdef Py_ssize_t pos
    cdef Py_ssize_t end
    cdef bint is_file
    cdef bint eof
    cdef int64_t head
    cdef int64_t runs
    cdef int64_t total
    cdef int64_t exp_runs
    cdef int64_t exp_total
    cdef object name

    def __cinit__(self, data, exp_runs, exp_total, name):
        self.data = data
        self.exp_runs = exp_runs
        self.exp_total = exp_total
        self.name = name
        self.head = 0
        self.runs = 0
        self.total = 0
        self.is_file = not isinstance(data, (bytes, bytearray, memoryview))
        self.eof = not self.is_file
        self.buf = b"" if self.is_file else bytes(data)
        self._reset()

    cdef void _reset(self):
        self.p = <const uint8_t*> (<const char*> self.buf)
        self.pos = 0
        self.end = len(self.buf)

    cdef int refill(self) except -1:
        chunk = self.data.read(CHUNK)
        if not chunk:
            self.eof = True
        self.buf = self.buf[self.pos:self.end] + chunk
        self._reset()
        return 0

    cdef int next_run(self, int64_t* h, int64_t* l) except -1:
        cdef uint64_t d, v
        if self.is_file and not self.eof and self.end - self.pos < 24:
            self.refill()
        if self.pos >= self.end:
            if self.runs != self.exp_runs or self.total != self.exp_total:
                raise CorruptionError(
                    f"{self.name}: decoded {self.runs} runs / {self.total} symbols,"
                    f" header says {self.exp_runs} / {self.exp_total}")
            return 0
        if get_varint(self.p, self.end, &self.pos, &d) < 0 or get_varint(self.p, self.end, &self.pos, &v) < 0:
            raise CorruptionError(f"truncated rank-run payload in {self.name}")
        if v == 0:
            raise CorruptionError(f"zero-length rank run in {self.name}")
        if self.runs > 0 and d == 0:
            raise CorruptionError(f"{self.name}: heads not increasing")
        self.head += <int64_t> d
        self.runs += 1
        self.total += <int64_t> v
        h[0] = self.head
        l[0] = <int64_t> v
        return 1


cdef class MultiwayMerge:
    """Heap-based merge of sorted rank-run sources into one coalesced stream.

    Each source is ``(data, run_count, total_length, name)`` where ``data`` is a
    payload bytes object or a binary file positioned at the payload start.
    """

    cdef list sources
    cdef object on_exhausted
    cdef int64_t* hh
    cdef int64_t* hl
    cdef Py_ssize_t* hi
    cdef Py_ssize_t hn
    cdef int64_t pend_h
    cdef int64_t pend_l
    cdef readonly int64_t total

    def __cinit__(self, sources, on_exhausted=None):
        cdef Py_ssize_t k
        self.sources = [_Source(s[0], s[1], s[2], s[3]) for s in sources]
        self.on_exhausted = on_exhausted
        k = max(1, len(self.sources))
        self.hh = <int64_t*> malloc(k * sizeof(int64_t))
        self.hl = <int64_t*> malloc(k * sizeof(int64_t))
        self.hi = <Py_ssize_t*> malloc(k * sizeof(Py_ssize_t))
        if self.hh == NULL or self.hl == NULL or self.hi == NULL:
            raise MemoryError()
        self.hn = 0
        self.pend_h = 0
        self.pend_l = 0
        self.total = 0
        for k in range(len(self.sources)):
            self.advance(k)

    def __dealloc__(self):
        free(self.hh)
        free(self.hl)
        free(self.hi)

    cdef inline bint less(self, Py_ssize_t x, Py_ssize_t y) noexcept:
        return self.hh[x] < self.hh[y] or (self.hh[x] == self.hh[y] and self.hi[x] < self.hi[y])

    cdef void swap(self, Py_ssize_t x, Py_ssize_t y) noexcept:
        self.hh[x], self.hh[y] = self.hh[y], self.hh[x]
        self.hl[x], self.hl[y] = self.hl[y], self.hl[x]
        self.hi[x], self.hi[y] = self.hi[y], self.hi[x]

    cdef int advance(self, Py_ssize_t idx) except -1:
        cdef int64_t h, l
        cdef Py_ssize_t k, parent
        cdef _Source src = self.sources[idx]
        if src.next_run(&h, &l) == 0:
            if self.on_exhausted is not None:
                self.on_exhausted(idx)
            return 0
        k = self.hn
        self.hh[k] = h
        self.hl[k] = l
        self.hi[k] = idx
        self.hn += 1
        while k > 0:
            parent = (k - 1) >> 1
            if self.less(k, parent):
                self.swap(k, parent)
                k = parent
            else:
                break
        return 0

    cdef void pop(self, int64_t* h, int64_t* l, Py_ssize_t* idx) noexcept:
        cdef Py_ssize_t k = 0, child
        h[0] = self.hh[0]
        l[0] = self.hl[0]
        idx[0] = self.hi[0]
        self.hn -= 1
        if self.hn == 0:
            return
        self.hh[0] = self.hh[self.hn]
        self.hl[0] = self.hl[self.hn]
        self.hi[0] = self.hi[self.hn]
        while True:
            child = 2 * k + 1
            if child >= self.hn:
                break
            if child + 1 < self.hn and self.less(child + 1, child):
                child += 1
            if self.less(child, k):
                self.swap(child, k)
                k = child
            else:
                break

    def next_batch(self, Py_ssize_t max_runs=65536):
        heads = np.empty(max_runs, dtype=np.int64)
        lengths = np.empty(max_runs, dtype=np.int64)
        cdef int64_t[::1] ho = heads
        cdef int64_t[::1] lo = lengths
        cdef Py_ssize_t k = 0, idx
        cdef int64_t h, l, added = 0
        while self.hn and k < max_runs:
            self.pop(&h, &l, &idx)
            self.advance(idx)
            if self.pend_l and self.pend_h == h:
                self.pend_l += l
                continue
            if self.pend_l:
                ho[k] = self.pend_h
                lo[k] = self.pend_l
                added += self.pend_l
                k += 1
            self.pend_h = h
            self.pend_l = l
        if self.hn == 0 and self.pend_l and k < max_runs:
            ho[k] = self.pend_h
            lo[k] = self.pend_l
            added += self.pend_l
            k += 1
            self.pend_l = 0
        self.total += added
        return heads[:k], lengths[:k]


# --- interleave -------------------------------------------------------------

cdef struct Cursor:
    Py_ssize_t block
    Py_ssize_t p
    Py_ssize_t end
    int64_t block_left
    int sym
    int64_t left


cdef class Interleaver:
    """Copies A and B symbols into a fresh block writer following the rank stream."""

    cdef BwtCore a
    cdef BwtCore b
    cdef BlockWriter writer
    cdef Cursor cur_a
    cdef Cursor cur_b
    cdef readonly int64_t n_a
    cdef readonly int64_t n_b
    cdef readonly int64_t a_done
    cdef readonly int64_t b_done

    def __cinit__(self, BwtCore core_a, BwtCore core_b):
        self.a = core_a
        self.b = core_b
        self.writer = BlockWriter()
        self.writer.reserve(len(core_a.blocks) + len(core_b.blocks))
        memset(&self.cur_a, 0, sizeof(Cursor))
        memset(&self.cur_b, 0, sizeof(Cursor))
        self.n_a = core_a.n
        self.n_b = core_b.n
        self.a_done = 0
        self.b_done = 0

    cdef int copy(self, BwtCore core, Cursor* cur, int64_t count) except -1 nogil:
        """0 on success, 1 when the input runs out or is malformed."""
        cdef int64_t take
        while count > 0:
            if cur.left == 0:
                if cur.block_left == 0:
                    if cur.block >= core.nblocks:
                        return 1
                    cur.p = cur.block * BLOCK_SIZE
                    cur.end = cur.p + BLOCK_SIZE
                    cur.block_left = core.block_end(cur.block) - core.off[cur.block]
                    cur.block += 1
                if decode_run(core.bp, cur.end, &cur.p, &cur.sym, &cur.left) != 0:
                    return 1
                cur.block_left -= cur.left
                if cur.block_left < 0:
                    return 1
            take = count if count < cur.left else cur.left
            self.writer.c_add(cur.sym, take)
            cur.left -= take
            count -= take
        return 0

    def feed(self, heads, lengths):
        cdef const int64_t[::1] hv = np.ascontiguousarray(heads, dtype=np.int64)
        cdef const int64_t[::1] lv = np.ascontiguousarray(lengths, dtype=np.int64)
        cdef Py_ssize_t i
        cdef int rc = 0
        cdef int64_t r, l
        with nogil:
            for i in range(hv.shape[0]):
                r = hv[i]
                l = lv[i]
                if r < self.a_done or r > self.n_a:
                    rc = 1
                    break
                if l <= 0 or self.b_done + l > self.n_b:
                    rc = 2
                    break
                if self.copy(self.a, &self.cur_a, r - self.a_done):
                    rc = 3
                    break
                self.a_done = r
                if self.copy(self.b, &self.cur_b, l):
                    rc = 3
                    break
                self.b_done += l
        if rc == 1:
            raise CorruptionError(f"rank {r} out of order or beyond n_A = {self.n_a}")
        if rc == 2:
            raise CorruptionError("rank stream longer than n_B")
        if rc == 3:
            raise CorruptionError("rank stream runs past the end of an input")

    def finish(self):
        if self.b_done != self.n_b:
            raise CorruptionError(f"rank stream covers {self.b_done} of {self.n_b} symbols of B")
        cdef int rc
        with nogil:
            rc = self.copy(self.a, &self.cur_a, self.n_a - self.a_done)
        if rc:
            raise CorruptionError("input A ended early")
        self.a_done = self.n_a
        return self.writer.finish()

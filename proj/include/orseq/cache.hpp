#ifndef ORSEQ_CACHE_HPP
#define ORSEQ_CACHE_HPP

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "orseq/common.hpp"
#include "orseq/renewal_ops.hpp"

namespace orseq {

inline constexpr char kCacheMagic[9] = "ORSQ0001";

// FNV-1a over raw bytes; used both for content keys and payload checksums.
inline std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t h = 14695981039346656037ULL) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::uint64_t fnv1a_str(const std::string& s) { return fnv1a(s.data(), s.size()); }

namespace detail {

struct ByteSink {
    std::vector<unsigned char> bytes;
    template <typename T>
    void put(const T& v) {
        const unsigned char* p = reinterpret_cast<const unsigned char*>(&v);
        bytes.insert(bytes.end(), p, p + sizeof(T));
    }
    void put_vec(const std::vector<Real>& v) {
        put(static_cast<std::uint64_t>(v.size()));
        const unsigned char* p = reinterpret_cast<const unsigned char*>(v.data());
        bytes.insert(bytes.end(), p, p + v.size() * sizeof(Real));
    }
};

struct ByteSource {
    const unsigned char* p;
    const unsigned char* end;
    bool ok = true;
    template <typename T>
    T get() {
        T v{};
        if (p + sizeof(T) > end) {
            ok = false;
            return v;
        }
        std::memcpy(&v, p, sizeof(T));
        p += sizeof(T);
        return v;
    }
    std::vector<Real> get_vec() {
        auto n = get<std::uint64_t>();
        std::vector<Real> v;
        if (!ok || p + n * sizeof(Real) > end) {
            ok = false;
            return v;
        }
        v.resize(n);
        std::memcpy(v.data(), p, n * sizeof(Real));
        p += n * sizeof(Real);
        return v;
    }
};

}  // namespace detail

// Little-endian binary cache of an OperatorSeq: versioned header with the
// build parameters and a density checksum, then the sparse matrix payloads,
// ending with an FNV checksum of everything before it.
inline void save_operator_seq(const OperatorSeq& seq, const std::string& path) {
    detail::ByteSink sink;
    sink.bytes.insert(sink.bytes.end(), kCacheMagic, kCacheMagic + 8);
    sink.put(static_cast<std::int64_t>(seq.m));
    sink.put(static_cast<std::int64_t>(seq.N));
    sink.put(static_cast<std::int64_t>(seq.n_deep));
    sink.put(seq.y_lo);
    sink.put(seq.cell_w);
    sink.put(seq.alpha);
    sink.put(seq.beta);
    sink.put(seq.tail_c);
    sink.put(fnv1a(seq.h.data(), seq.h.size() * sizeof(Real)));  // density checksum
    sink.put_vec(seq.h);
    sink.put_vec(seq.mu);
    for (int n = 1; n <= seq.N; ++n) {
        const auto& cols = seq.R[n - 1];
        sink.put(static_cast<std::uint32_t>(cols.size()));
        for (const auto& sc : cols) {
            sink.put(static_cast<std::int32_t>(sc.src));
            sink.put_vec(sc.col);
        }
    }
    sink.put(static_cast<std::uint64_t>(seq.deep.size()));
    for (const auto& d : seq.deep) {
        sink.put(static_cast<std::int64_t>(d.n));
        sink.put(static_cast<std::int32_t>(d.src));
        sink.put(d.mass);
    }
    sink.put_vec(seq.mu_profile);
    sink.put_vec(seq.f);
    sink.put_vec(seq.tail);
    std::uint64_t checksum = fnv1a(sink.bytes.data(), sink.bytes.size());
    sink.put(checksum);

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open cache file for writing: " + path);
    out.write(reinterpret_cast<const char*>(sink.bytes.data()),
              static_cast<std::streamsize>(sink.bytes.size()));
}

inline bool load_operator_seq(const std::string& path, OperatorSeq& seq) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return false;
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    if (bytes.size() < 8 + sizeof(std::uint64_t)) return false;
    if (std::memcmp(bytes.data(), kCacheMagic, 8) != 0) return false;
    std::uint64_t stored;
    std::memcpy(&stored, bytes.data() + bytes.size() - sizeof(std::uint64_t),
                sizeof(std::uint64_t));
    if (fnv1a(bytes.data(), bytes.size() - sizeof(std::uint64_t)) != stored) return false;

    detail::ByteSource src{bytes.data() + 8, bytes.data() + bytes.size() - sizeof(std::uint64_t)};
    OperatorSeq out;
    out.m = static_cast<int>(src.get<std::int64_t>());
    out.N = static_cast<int>(src.get<std::int64_t>());
    out.n_deep = static_cast<int>(src.get<std::int64_t>());
    out.y_lo = src.get<Real>();
    out.cell_w = src.get<Real>();
    out.alpha = src.get<Real>();
    out.beta = src.get<Real>();
    out.tail_c = src.get<Real>();
    (void)src.get<std::uint64_t>();  // density checksum, informational
    out.h = src.get_vec();
    out.mu = src.get_vec();
    if (!src.ok || out.m <= 0 || out.N <= 0) return false;
    out.R.resize(out.N);
    for (int n = 1; n <= out.N && src.ok; ++n) {
        auto ncols = src.get<std::uint32_t>();
        for (std::uint32_t k = 0; k < ncols && src.ok; ++k) {
            SrcCol sc;
            sc.src = static_cast<int>(src.get<std::int32_t>());
            sc.col = src.get_vec();
            out.R[n - 1].push_back(std::move(sc));
        }
    }
    auto ndeep = src.get<std::uint64_t>();
    for (std::uint64_t k = 0; k < ndeep && src.ok; ++k) {
        OperatorSeq::Deep d;
        d.n = static_cast<int>(src.get<std::int64_t>());
        d.src = static_cast<int>(src.get<std::int32_t>());
        d.mass = src.get<Real>();
        out.deep.push_back(d);
    }
    out.mu_profile = src.get_vec();
    out.f = src.get_vec();
    out.tail = src.get_vec();
    if (!src.ok) return false;
    seq = std::move(out);
    return true;
}

}  // namespace orseq

#endif

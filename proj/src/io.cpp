#include "qlsv/io.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>

namespace qlsv {

namespace fs = std::filesystem;

void atomic_write(const fs::path& path, const std::string& bytes) {
    fs::path tmp = path;
    tmp += ".tmp." + std::to_string(rng_u64(std::hash<std::string>{}(path.string()),
                                            reinterpret_cast<std::uintptr_t>(&bytes),
                                            static_cast<std::uint64_t>(
                                                std::chrono::steady_clock::now()
                                                    .time_since_epoch()
                                                    .count())));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw NumericError("atomic_write: cannot open " + tmp.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw NumericError("atomic_write: short write to " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw NumericError("read_file: cannot open " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
    return bytes;
}

std::uint64_t file_checksum(const fs::path& path) {
    return fnv1a64(read_file(path));
}

namespace {

template <typename T>
void put(std::string& out, const T& v) {
    const char* p = reinterpret_cast<const char*>(&v);
    out.append(p, sizeof(T));
}

template <typename T>
T take(const std::string& in, std::size_t& off) {
    if (off + sizeof(T) > in.size()) {
        throw NumericError("decode: truncated record");
    }
    T v;
    std::memcpy(&v, in.data() + off, sizeof(T));
    off += sizeof(T);
    return v;
}

}  // namespace

std::string encode_grid_function(const GridFunction& f) {
    std::string out;
    out.reserve(17 + f.values.size() * 8);
    out.append("GFN1", 4);
    put(out, static_cast<std::uint32_t>(f.grid->size()));
    put(out, f.grid->grading());
    put(out, static_cast<std::uint8_t>(f.tag));
    for (double v : f.values) put(out, v);
    return out;
}

GridFunction decode_grid_function(const std::string& bytes) {
    if (bytes.size() < 17 || bytes.compare(0, 4, "GFN1") != 0) {
        throw NumericError("decode_grid_function: bad magic");
    }
    std::size_t off = 4;
    const auto n = take<std::uint32_t>(bytes, off);
    const auto p = take<double>(bytes, off);
    const auto tag = take<std::uint8_t>(bytes, off);
    if (tag > 1) throw NumericError("decode_grid_function: bad tag");
    if (bytes.size() != 17 + static_cast<std::size_t>(n) * 8) {
        throw NumericError("decode_grid_function: bad length");
    }
    GridFunction f(GradedGrid::make(static_cast<int>(n), p),
                   static_cast<FunctionTag>(tag));
    for (std::uint32_t i = 0; i < n; ++i) f.values[i] = take<double>(bytes, off);
    return f;
}

void write_grid_function(const fs::path& path, const GridFunction& f) {
    atomic_write(path, encode_grid_function(f));
}

GridFunction read_grid_function(const fs::path& path) {
    return decode_grid_function(read_file(path));
}

std::string encode_operator(const TransferOperatorDisc& op) {
    std::string out;
    const std::uint64_t nnz = op.nnz();
    out.reserve(32 + nnz * 16);
    out.append("TOP1", 4);
    put(out, op.gamma);
    put(out, static_cast<std::uint32_t>(op.grid->size()));
    put(out, op.grid->grading());
    put(out, nnz);
    for (int j = 0; j < op.grid->size(); ++j) {
        for (int k = op.row_ptr[j]; k < op.row_ptr[j + 1]; ++k) {
            put(out, static_cast<std::uint32_t>(j));
            put(out, static_cast<std::uint32_t>(op.col[k]));
            put(out, op.weight[k]);
        }
    }
    return out;
}

OperatorPtr decode_operator(const std::string& bytes) {
    if (bytes.size() < 32 || bytes.compare(0, 4, "TOP1") != 0) {
        throw NumericError("decode_operator: bad magic");
    }
    std::size_t off = 4;
    const auto gamma = take<double>(bytes, off);
    const auto n = take<std::uint32_t>(bytes, off);
    const auto p = take<double>(bytes, off);
    const auto nnz = take<std::uint64_t>(bytes, off);
    if (bytes.size() != 32 + nnz * 16) {
        throw NumericError("decode_operator: bad length");
    }
    auto op = std::make_shared<TransferOperatorDisc>();
    op->gamma = gamma;
    op->grid = GradedGrid::make(static_cast<int>(n), p);
    op->row_ptr.assign(static_cast<std::size_t>(n) + 1, 0);
    std::vector<std::pair<std::uint32_t, std::pair<std::uint32_t, double>>> trips;
    trips.reserve(nnz);
    for (std::uint64_t t = 0; t < nnz; ++t) {
        const auto row = take<std::uint32_t>(bytes, off);
        const auto col = take<std::uint32_t>(bytes, off);
        const auto w = take<double>(bytes, off);
        if (row >= n || col >= n) throw NumericError("decode_operator: index range");
        trips.push_back({row, {col, w}});
    }
    std::stable_sort(trips.begin(), trips.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& t : trips) op->row_ptr[t.first + 1]++;
    for (std::uint32_t j = 0; j < n; ++j) op->row_ptr[j + 1] += op->row_ptr[j];
    op->col.resize(nnz);
    op->weight.resize(nnz);
    std::vector<int> cursor(op->row_ptr.begin(), op->row_ptr.end() - 1);
    for (const auto& t : trips) {
        const int k = cursor[t.first]++;
        op->col[static_cast<std::size_t>(k)] = static_cast<int>(t.second.first);
        op->weight[static_cast<std::size_t>(k)] = t.second.second;
    }
    return op;
}

void write_operator(const fs::path& path, const TransferOperatorDisc& op) {
    atomic_write(path, encode_operator(op));
}

OperatorPtr read_operator(const fs::path& path) {
    return decode_operator(read_file(path));
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace qlsv

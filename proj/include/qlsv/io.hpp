#ifndef QLSV_IO_HPP
#define QLSV_IO_HPP

#include <filesystem>
#include <string>

#include "qlsv/grid.hpp"
#include "qlsv/transfer_operator.hpp"

namespace qlsv {

/// Write-then-rename; readers never observe partial files and concurrent
/// writers of the same key both succeed.
void atomic_write(const std::filesystem::path& path, const std::string& bytes);

std::string read_file(const std::filesystem::path& path);
std::uint64_t file_checksum(const std::filesystem::path& path);

/// Flat binary record: "GFN1", N u32 LE, p f64, tag u8, N f64 cell values.
std::string encode_grid_function(const GridFunction& f);
GridFunction decode_grid_function(const std::string& bytes);
void write_grid_function(const std::filesystem::path& path, const GridFunction& f);
GridFunction read_grid_function(const std::filesystem::path& path);

/// Operator cache record: "TOP1", gamma f64, N u32, p f64, nnz u64, then nnz
/// triplets (row u32, col u32, weight f64).  Rows are target cells.
std::string encode_operator(const TransferOperatorDisc& op);
OperatorPtr decode_operator(const std::string& bytes);
void write_operator(const std::filesystem::path& path, const TransferOperatorDisc& op);
OperatorPtr read_operator(const std::filesystem::path& path);

/// Shortest round-trip decimal formatting; keeps CSV output byte-stable.
std::string format_double(double v);

}  // namespace qlsv

#endif

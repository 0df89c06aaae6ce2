#pragma once

// Shared plumbing: error taxonomy, FNV-1a hashing, text files, and a small
// little-endian binary reader/writer pair used by every serialized artifact.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace earlyrisk {

// Error families map onto the process exit codes of the command-line driver:
// UsageError -> 1, DataError (and ParseError) -> 2, StaleArtifactError -> 3.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public DataError {
 public:
  ParseError(const std::string& what, std::size_t byte_offset)
      : DataError(what + " (byte offset " + std::to_string(byte_offset) + ")"),
        byte_offset_(byte_offset) {}
  std::size_t byte_offset() const noexcept { return byte_offset_; }

 private:
  std::size_t byte_offset_;
};

class StaleArtifactError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// FNV-1a (64-bit). Used for config hashes, artifact fingerprints, and seed
// derivation. Chosen for being trivially portable and fully specified.
// ---------------------------------------------------------------------------

inline constexpr std::uint64_t kFnvOffsetBasis = 14695981039346656037ull;
inline constexpr std::uint64_t kFnvPrime = 1099511628211ull;

inline std::uint64_t fnv1a64(std::string_view bytes,
                             std::uint64_t h = kFnvOffsetBasis) {
  for (unsigned char ch : bytes) {
    h ^= static_cast<std::uint64_t>(ch);
    h *= kFnvPrime;
  }
  return h;
}

inline std::uint64_t fnv1a64_u64(std::uint64_t value,
                                 std::uint64_t h = kFnvOffsetBasis) {
  for (int i = 0; i < 8; ++i) {
    h ^= (value >> (8 * i)) & 0xffu;
    h *= kFnvPrime;
  }
  return h;
}

inline std::string hash_to_hex(std::uint64_t h) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[h & 0xfu];
    h >>= 4;
  }
  return out;
}

inline std::uint64_t hex_to_hash(std::string_view hex) {
  std::uint64_t h = 0;
  if (hex.empty() || hex.size() > 16) {
    throw DataError("malformed hash literal: '" + std::string(hex) + "'");
  }
  for (char c : hex) {
    int d;
    if (c >= '0' && c <= '9') {
      d = c - '0';
    } else if (c >= 'a' && c <= 'f') {
      d = c - 'a' + 10;
    } else {
      throw DataError("malformed hash literal: '" + std::string(hex) + "'");
    }
    h = (h << 4) | static_cast<std::uint64_t>(d);
  }
  return h;
}

// ---------------------------------------------------------------------------
// Whole-file text IO. Binary mode everywhere so artifact bytes round-trip
// exactly as written.
// ---------------------------------------------------------------------------

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("cannot open file for reading: " + path.string());
  }
  std::string content;
  in.seekg(0, std::ios::end);
  content.resize(static_cast<std::size_t>(in.tellg()));
  in.seekg(0, std::ios::beg);
  in.read(content.data(), static_cast<std::streamsize>(content.size()));
  if (!in && content.size() != 0) {
    throw DataError("short read on file: " + path.string());
  }
  return content;
}

inline void write_text_file(const std::filesystem::path& path,
                            std::string_view content) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw DataError("cannot open file for writing: " + path.string());
  }
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) {
    throw DataError("short write on file: " + path.string());
  }
}

inline std::uint64_t hash_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("cannot open file for hashing: " + path.string());
  }
  std::uint64_t h = kFnvOffsetBasis;
  char buf[65536];
  while (in) {
    in.read(buf, sizeof(buf));
    std::streamsize got = in.gcount();
    h = fnv1a64(std::string_view(buf, static_cast<std::size_t>(got)), h);
  }
  return h;
}

// Hash a directory tree as the chained hash of (relative path, file hash)
// pairs in sorted order, so renames and edits both change the fingerprint.
inline std::uint64_t hash_tree(const std::filesystem::path& root) {
  if (!std::filesystem::is_directory(root)) {
    throw DataError("not a directory: " + root.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry :
       std::filesystem::recursive_directory_iterator(root)) {
    if (entry.is_regular_file()) {
      files.push_back(std::filesystem::relative(entry.path(), root));
    }
  }
  std::sort(files.begin(), files.end());
  std::uint64_t h = kFnvOffsetBasis;
  for (const auto& rel : files) {
    h = fnv1a64(rel.generic_string(), h);
    h = fnv1a64_u64(hash_file(root / rel), h);
  }
  return h;
}

// Hash a path that may be a file or a directory.
inline std::uint64_t hash_path(const std::filesystem::path& path) {
  if (std::filesystem::is_directory(path)) {
    return hash_tree(path);
  }
  return hash_file(path);
}

// ---------------------------------------------------------------------------
// Little-endian binary IO. Doubles travel as their IEEE-754 bit patterns, so
// serialized models reload bit-exactly on any platform we target.
// ---------------------------------------------------------------------------

class BinaryWriter {
 public:
  explicit BinaryWriter(const std::filesystem::path& path) {
    if (path.has_parent_path()) {
      std::filesystem::create_directories(path.parent_path());
    }
    out_.open(path, std::ios::binary | std::ios::trunc);
    if (!out_) {
      throw DataError("cannot open file for writing: " + path.string());
    }
    path_ = path.string();
  }

  void bytes(const void* data, std::size_t n) {
    out_.write(static_cast<const char*>(data),
               static_cast<std::streamsize>(n));
    if (!out_) {
      throw DataError("short write on file: " + path_);
    }
  }

  void u8(std::uint8_t v) { bytes(&v, 1); }

  void u32(std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    bytes(b, 4);
  }

  void u64(std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    bytes(b, 8);
  }

  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

  void f64_array(const std::vector<double>& values) {
    u64(values.size());
    for (double v : values) f64(v);
  }

  void str(std::string_view s) {
    u64(s.size());
    bytes(s.data(), s.size());
  }

 private:
  std::ofstream out_;
  std::string path_;
};

class BinaryReader {
 public:
  explicit BinaryReader(const std::filesystem::path& path) {
    in_.open(path, std::ios::binary);
    if (!in_) {
      throw DataError("cannot open file for reading: " + path.string());
    }
    path_ = path.string();
  }

  void bytes(void* data, std::size_t n) {
    in_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      throw DataError("truncated file: " + path_);
    }
  }

  std::uint8_t u8() {
    std::uint8_t v;
    bytes(&v, 1);
    return v;
  }

  std::uint32_t u32() {
    unsigned char b[4];
    bytes(b, 4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
    return v;
  }

  std::uint64_t u64() {
    unsigned char b[8];
    bytes(b, 8);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    return v;
  }

  double f64() { return std::bit_cast<double>(u64()); }

  std::vector<double> f64_array() {
    std::uint64_t n = u64();
    check_count(n);
    std::vector<double> values(n);
    for (auto& v : values) v = f64();
    return values;
  }

  std::string str() {
    std::uint64_t n = u64();
    check_count(n);
    std::string s(n, '\0');
    bytes(s.data(), n);
    return s;
  }

  void require_magic(std::string_view magic) {
    std::string got(magic.size(), '\0');
    bytes(got.data(), got.size());
    if (got != magic) {
      throw DataError("bad file magic in " + path_ + " (expected '" +
                      std::string(magic) + "')");
    }
  }

 private:
  void check_count(std::uint64_t n) const {
    // Guards against reading a corrupt length prefix and then allocating
    // terabytes; artifacts at this project's scale are far below this bound.
    if (n > (1ull << 32)) {
      throw DataError("implausible element count in " + path_);
    }
  }

  std::ifstream in_;
  std::string path_;
};

}  // namespace earlyrisk

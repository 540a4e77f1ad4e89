#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "safari/embedding_set.hpp"
#include "safari/engine.hpp"

namespace safari {

enum class EmbeddingFormat { binary, csv, jsonl };

EmbeddingFormat parse_embedding_format(std::string_view text);
/// .sfse -> binary, .csv -> csv, .jsonl -> jsonl.
EmbeddingFormat infer_embedding_format(const std::filesystem::path& path);

struct LoadOptions {
  bool allow_label_violations = false;
};

/// Loads and validates an embedding file. Every malformed input throws
/// ErrorKind::input with the offending location.
EmbeddingSet load_embeddings(const std::filesystem::path& path, EmbeddingFormat format,
                             const LoadOptions& options = {});
EmbeddingSet load_embeddings(const std::filesystem::path& path, const LoadOptions& options = {});

void save_embeddings(const EmbeddingSet& set, const std::filesystem::path& path,
                     EmbeddingFormat format);

/// In-memory binary codec ("SFSE" v1). Values are stored as little-endian
/// binary32, so decoding yields float-rounded doubles.
std::string encode_binary(const EmbeddingSet& set);
EmbeddingSet decode_binary(std::string_view bytes, const LoadOptions& options = {});

std::string encode_csv(const EmbeddingSet& set);
EmbeddingSet decode_csv(std::string_view text, const LoadOptions& options = {});

std::string encode_jsonl(const EmbeddingSet& set);
EmbeddingSet decode_jsonl(std::string_view text, const LoadOptions& options = {});

/// Dendrogram JSON with a SHA-256 digest over the canonical dump of every
/// other field. Subspace bases are base64 binary32 arrays.
std::string encode_dendrogram(const Dendrogram& dendrogram);
Dendrogram decode_dendrogram(std::string_view text);
void save_dendrogram(const Dendrogram& dendrogram, const std::filesystem::path& path);
Dendrogram load_dendrogram(const std::filesystem::path& path);

/// Standalone SFS registry file, same subspace encoding as the dendrogram.
std::string encode_sfs_registry(const std::vector<SfsEntry>& registry);
std::vector<SfsEntry> decode_sfs_registry(std::string_view text);

/// `iteration,exact,approx,mu,tau,is_sfs`; absent values are empty fields.
std::string encode_trace_csv(const std::vector<ShiftRecord>& trace);
std::vector<ShiftRecord> decode_trace_csv(std::string_view text);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

/// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);

std::string sha256_hex(std::string_view bytes);
std::string base64_encode(std::string_view bytes);
std::string base64_decode(std::string_view text);

}  // namespace safari

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace probwipe {

// Malformed input or a model/data mismatch. Distinct from std::invalid_argument
// (caller passed a bad parameter) so the CLI can map the two to different exit
// codes.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The empty string is the missing-value marker everywhere.
inline bool is_missing(const std::string& v) { return v.empty(); }

struct Schema {
  std::vector<std::string> attributes;
  // Per attribute: sorted, deduplicated, observed non-missing values.
  std::vector<std::vector<std::string>> domains;

  std::size_t size() const { return attributes.size(); }
  int attr_index(const std::string& name) const;  // -1 if unknown
  // Position of v in the attribute's domain, -1 if absent. Missing is never in
  // a domain.
  int value_index(std::size_t attr, const std::string& v) const;
};

struct Tuple {
  std::int64_t id = 0;
  std::vector<std::string> values;

  bool fully_specified() const {
    for (const auto& v : values)
      if (is_missing(v)) return false;
    return true;
  }
};

inline bool same_values(const Tuple& a, const Tuple& b) { return a.values == b.values; }

struct Dataset {
  Schema schema;
  std::vector<Tuple> rows;

  std::size_t num_attrs() const { return schema.size(); }
  std::size_t num_rows() const { return rows.size(); }
};

// Recompute domains from the rows currently in d (sorted unique non-missing).
void rebuild_domains(Dataset& d);

// RFC 4180: quoted fields, doubled quotes, commas and line breaks inside
// quotes, CRLF or LF records. Ragged rows raise DataError with the record
// number. Without a header, attributes are named A1..Am. Row ids are assigned
// 0..n-1 in file order.
Dataset load_csv_text(const std::string& text, bool has_header);
Dataset load_csv(const std::string& path, bool has_header);

std::string to_csv_text(const Dataset& d);  // always writes a header record
void save_csv(const Dataset& d, const std::string& path);

// ceil(fraction * n) rows drawn uniformly without replacement, kept in input
// order with original ids. fraction must lie in (0, 1]. Deterministic for a
// fixed seed.
Dataset sample(const Dataset& d, double fraction, std::uint64_t seed);

}  // namespace probwipe

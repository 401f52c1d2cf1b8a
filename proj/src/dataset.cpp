#include "probwipe/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "probwipe/rng.hpp"

namespace probwipe {

int Schema::attr_index(const std::string& name) const {
  for (std::size_t i = 0; i < attributes.size(); ++i)
    if (attributes[i] == name) return static_cast<int>(i);
  return -1;
}

int Schema::value_index(std::size_t attr, const std::string& v) const {
  if (is_missing(v)) return -1;
  const auto& dom = domains[attr];
  auto it = std::lower_bound(dom.begin(), dom.end(), v);
  if (it != dom.end() && *it == v) return static_cast<int>(it - dom.begin());
  return -1;
}

void rebuild_domains(Dataset& d) {
  const std::size_t m = d.schema.attributes.size();
  std::vector<std::set<std::string>> seen(m);
  for (const auto& row : d.rows)
    for (std::size_t i = 0; i < m; ++i)
      if (!is_missing(row.values[i])) seen[i].insert(row.values[i]);
  d.schema.domains.assign(m, {});
  for (std::size_t i = 0; i < m; ++i)
    d.schema.domains[i].assign(seen[i].begin(), seen[i].end());
}

namespace {

std::vector<std::vector<std::string>> parse_records(const std::string& text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> fields;
  std::string cur;
  bool in_quotes = false;
  bool field_started = false;  // distinguishes a blank line from a lone empty field

  const std::size_t n = text.size();
  std::size_t i = 0;
  auto flush_field = [&] {
    fields.push_back(cur);
    cur.clear();
    field_started = false;
  };
  auto flush_record = [&] {
    if (!fields.empty() || field_started || !cur.empty()) {
      flush_field();
      records.push_back(std::move(fields));
      fields.clear();
    }
  };

  while (i < n) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < n && text[i + 1] == '"') {
          cur.push_back('"');
          i += 2;
        } else {
          in_quotes = false;
          ++i;
        }
      } else {
        cur.push_back(c);
        ++i;
      }
      continue;
    }
    switch (c) {
      case '"':
        in_quotes = true;
        field_started = true;
        ++i;
        break;
      case ',':
        flush_field();
        field_started = true;  // the field after the comma exists even if empty
        ++i;
        break;
      case '\r':
        if (i + 1 < n && text[i + 1] == '\n') ++i;
        flush_record();
        ++i;
        break;
      case '\n':
        flush_record();
        ++i;
        break;
      default:
        cur.push_back(c);
        field_started = true;
        ++i;
    }
  }
  if (in_quotes) throw DataError("csv: unterminated quoted field");
  flush_record();
  return records;
}

bool needs_quoting(const std::string& f) {
  return f.find_first_of(",\"\r\n") != std::string::npos;
}

void write_field(std::string& out, const std::string& f) {
  if (!needs_quoting(f)) {
    out += f;
    return;
  }
  out.push_back('"');
  for (char c : f) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
}

}  // namespace

Dataset load_csv_text(const std::string& text, bool has_header) {
  auto records = parse_records(text);
  if (records.empty()) throw DataError("csv: empty input");

  Dataset d;
  std::size_t m = records[0].size();
  std::size_t first_row = 0;
  if (has_header) {
    d.schema.attributes = records[0];
    first_row = 1;
    std::set<std::string> names;
    for (const auto& a : d.schema.attributes) {
      if (a.empty()) throw DataError("csv: empty attribute name in header");
      if (!names.insert(a).second) throw DataError("csv: duplicate attribute name '" + a + "'");
    }
  } else {
    for (std::size_t i = 0; i < m; ++i) d.schema.attributes.push_back("A" + std::to_string(i + 1));
  }

  d.rows.reserve(records.size() - first_row);
  for (std::size_t r = first_row; r < records.size(); ++r) {
    if (records[r].size() != m)
      throw DataError("csv: row " + std::to_string(r + 1) + ": expected " + std::to_string(m) +
                      " fields, got " + std::to_string(records[r].size()));
    Tuple t;
    t.id = static_cast<std::int64_t>(d.rows.size());
    t.values = std::move(records[r]);
    d.rows.push_back(std::move(t));
  }
  rebuild_domains(d);
  return d;
}

Dataset load_csv(const std::string& path, bool has_header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_csv_text(buf.str(), has_header);
}

std::string to_csv_text(const Dataset& d) {
  std::string out;
  for (std::size_t i = 0; i < d.schema.attributes.size(); ++i) {
    if (i) out.push_back(',');
    write_field(out, d.schema.attributes[i]);
  }
  out.push_back('\n');
  for (const auto& row : d.rows) {
    for (std::size_t i = 0; i < row.values.size(); ++i) {
      if (i) out.push_back(',');
      write_field(out, row.values[i]);
    }
    out.push_back('\n');
  }
  return out;
}

void save_csv(const Dataset& d, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << to_csv_text(d);
}

Dataset sample(const Dataset& d, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0) || fraction > 1.0)
    throw std::invalid_argument("sample: fraction must be in (0, 1]");
  const std::size_t n = d.rows.size();
  Dataset s;
  s.schema = d.schema;
  if (n == 0) return s;

  // Guard against 0.1 * 30 = 3.0000000000000004 style ceil overshoot.
  auto k = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
  if (k == 0) k = 1;
  if (k > n) k = n;

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t pick = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(order[i], order[pick]);
  }
  order.resize(k);
  std::sort(order.begin(), order.end());
  s.rows.reserve(k);
  for (std::size_t idx : order) s.rows.push_back(d.rows[idx]);
  return s;
}

}  // namespace probwipe

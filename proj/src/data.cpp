#include "spajm/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace spajm {

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  // shortest representation that round-trips exactly
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {  // doubled quote
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"' && field.empty()) {
      quoted = true;
    } else if (c == ',') {
      out.push_back(field);
      field.clear();
    } else if (c != '\r') {
      field.push_back(c);
    }
  }
  out.push_back(field);
  return out;
}

// quote a field when it holds a comma, quote, or line break; quotes double up
std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += '"';
  return out;
}

bool parse_number(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* b = s.data();
  const char* e = b + s.size();
  auto res = std::from_chars(b, e, out);
  return res.ec == std::errc() && res.ptr == e;
}

}  // namespace

void Table::check_new(const std::string& name, std::size_t n) {
  if (has(name)) throw IoError("duplicate column '" + name + "'");
  if (!order_.empty() && n != nrows_)
    throw IoError("column '" + name + "' has " + std::to_string(n) +
                  " rows, table has " + std::to_string(nrows_));
  nrows_ = n;
}

bool Table::has(const std::string& name) const {
  return num_.count(name) > 0 || str_.count(name) > 0;
}

bool Table::is_numeric(const std::string& name) const {
  if (num_.count(name)) return true;
  if (str_.count(name)) return false;
  throw IoError("no column '" + name + "'");
}

const std::vector<double>& Table::num(const std::string& name) const {
  auto it = num_.find(name);
  if (it == num_.end()) throw IoError("no numeric column '" + name + "'");
  return it->second;
}

const std::vector<std::string>& Table::str(const std::string& name) const {
  auto it = str_.find(name);
  if (it == str_.end()) throw IoError("no string column '" + name + "'");
  return it->second;
}

std::vector<std::string> Table::as_strings(const std::string& name) const {
  if (is_numeric(name)) {
    std::vector<std::string> out;
    out.reserve(nrows_);
    for (double v : num(name)) out.push_back(format_double(v));
    return out;
  }
  return str(name);
}

void Table::add_num(const std::string& name, std::vector<double> v) {
  check_new(name, v.size());
  order_.push_back(name);
  num_.emplace(name, std::move(v));
}

void Table::add_str(const std::string& name, std::vector<std::string> v) {
  check_new(name, v.size());
  order_.push_back(name);
  str_.emplace(name, std::move(v));
}

Table Table::select_rows(const std::vector<std::size_t>& rows) const {
  Table out;
  for (const auto& name : order_) {
    if (is_numeric(name)) {
      const auto& src = num(name);
      std::vector<double> v;
      v.reserve(rows.size());
      for (auto r : rows) v.push_back(src.at(r));
      out.add_num(name, std::move(v));
    } else {
      const auto& src = str(name);
      std::vector<std::string> v;
      v.reserve(rows.size());
      for (auto r : rows) v.push_back(src.at(r));
      out.add_str(name, std::move(v));
    }
  }
  return out;
}

Table Table::from_csv_text(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line))
    throw IoError(origin + ": empty file");
  std::vector<std::string> header = split_csv_line(line);
  for (const auto& h : header)
    if (h.empty()) throw IoError(origin + ": empty column name in header");
  std::vector<std::vector<std::string>> cols(header.size());
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw IoError(origin + ":" + std::to_string(lineno) + ": expected " +
                    std::to_string(header.size()) + " fields, got " +
                    std::to_string(fields.size()));
    for (std::size_t c = 0; c < fields.size(); ++c) cols[c].push_back(fields[c]);
  }
  Table out;
  for (std::size_t c = 0; c < header.size(); ++c) {
    // column is numeric iff every field parses as a number
    std::vector<double> nums;
    nums.reserve(cols[c].size());
    bool numeric = true;
    for (const auto& f : cols[c]) {
      double v;
      if (!parse_number(f, v)) {
        numeric = false;
        break;
      }
      nums.push_back(v);
    }
    if (numeric && !cols[c].empty())
      out.add_num(header[c], std::move(nums));
    else
      out.add_str(header[c], std::move(cols[c]));
  }
  return out;
}

Table Table::read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_csv_text(ss.str(), path);
}

std::string Table::to_csv_text() const {
  std::ostringstream out;
  for (std::size_t c = 0; c < order_.size(); ++c)
    out << (c ? "," : "") << csv_escape(order_[c]);
  out << "\n";
  std::vector<std::vector<std::string>> rendered;
  rendered.reserve(order_.size());
  for (const auto& name : order_) rendered.push_back(as_strings(name));
  for (std::size_t r = 0; r < nrows_; ++r) {
    for (std::size_t c = 0; c < rendered.size(); ++c)
      out << (c ? "," : "") << csv_escape(rendered[c][r]);
    out << "\n";
  }
  return out.str();
}

void Table::write_csv(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << to_csv_text();
  if (!out) throw IoError("write failed for '" + path + "'");
}

namespace {

std::vector<int> int_column(const Table& t, const std::string& name) {
  if (!t.has(name)) throw IoError("missing required column '" + name + "'");
  if (!t.is_numeric(name)) throw IoError("column '" + name + "' must be numeric");
  std::vector<int> out;
  out.reserve(t.nrows());
  for (double v : t.num(name)) {
    if (v != std::floor(v))
      throw IoError("column '" + name + "' must contain integers");
    out.push_back(static_cast<int>(v));
  }
  return out;
}

Table drop_columns(const Table& t, const std::vector<std::string>& drop) {
  Table out;
  for (const auto& name : t.names()) {
    if (std::find(drop.begin(), drop.end(), name) != drop.end()) continue;
    if (t.is_numeric(name))
      out.add_num(name, t.num(name));
    else
      out.add_str(name, t.str(name));
  }
  return out;
}

}  // namespace

LongitudinalDataset LongitudinalDataset::from_table(const Table& t) {
  LongitudinalDataset d;
  d.id = int_column(t, "id");
  if (!t.has("time") || !t.is_numeric("time"))
    throw IoError("longitudinal data needs a numeric 'time' column");
  if (!t.has("y") || !t.is_numeric("y"))
    throw IoError("longitudinal data needs a numeric 'y' column");
  d.time = t.num("time");
  d.y = t.num("y");
  d.covariates = drop_columns(t, {"id", "time", "y"});
  for (std::size_t r = 0; r < d.id.size(); ++r) {
    if (d.id[r] < 1) throw IoError("subject ids must be >= 1");
    d.n_subjects = std::max(d.n_subjects, d.id[r]);
    if (!(d.time[r] >= 0.0))
      throw IoError("observation times must be >= 0");
  }
  return d;
}

LongitudinalDataset LongitudinalDataset::read_csv(const std::string& path) {
  return from_table(Table::read_csv(path));
}

Table LongitudinalDataset::to_table() const {
  Table t;
  std::vector<double> idd(id.begin(), id.end());
  t.add_num("id", idd);
  t.add_num("time", time);
  t.add_num("y", y);
  for (const auto& name : covariates.names()) {
    if (covariates.is_numeric(name))
      t.add_num(name, covariates.num(name));
    else
      t.add_str(name, covariates.str(name));
  }
  return t;
}

SurvivalDataset SurvivalDataset::from_table(const Table& t) {
  SurvivalDataset d;
  d.id = int_column(t, "id");
  if (!t.has("T") || !t.is_numeric("T"))
    throw IoError("survival data needs a numeric 'T' column");
  d.time = t.num("T");
  d.event = int_column(t, "delta");
  d.covariates = drop_columns(t, {"id", "T", "delta"});
  std::vector<bool> seen;
  for (std::size_t r = 0; r < d.id.size(); ++r) {
    if (d.id[r] < 1) throw IoError("subject ids must be >= 1");
    d.n_subjects = std::max(d.n_subjects, d.id[r]);
    if (static_cast<std::size_t>(d.id[r]) > seen.size()) seen.resize(d.id[r], false);
    if (seen[d.id[r] - 1])
      throw IoError("duplicate survival row for subject " + std::to_string(d.id[r]));
    seen[d.id[r] - 1] = true;
    if (!(d.time[r] > 0.0))
      throw IoError("follow-up times must be > 0");
    if (d.event[r] != 0 && d.event[r] != 1)
      throw IoError("delta must be 0 or 1");
  }
  return d;
}

SurvivalDataset SurvivalDataset::read_csv(const std::string& path) {
  return from_table(Table::read_csv(path));
}

Table SurvivalDataset::to_table() const {
  Table t;
  std::vector<double> idd(id.begin(), id.end());
  std::vector<double> ev(event.begin(), event.end());
  t.add_num("id", idd);
  t.add_num("T", time);
  t.add_num("delta", ev);
  for (const auto& name : covariates.names()) {
    if (covariates.is_numeric(name))
      t.add_num(name, covariates.num(name));
    else
      t.add_str(name, covariates.str(name));
  }
  return t;
}

std::size_t SurvivalDataset::row_of(int subject_id) const {
  for (std::size_t r = 0; r < id.size(); ++r)
    if (id[r] == subject_id) return r;
  throw IoError("subject " + std::to_string(subject_id) + " not in survival data");
}

}  // namespace spajm

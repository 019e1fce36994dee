#pragma once

// CSV-backed column table plus the two dataset views used by the model:
// longitudinal (one row per measurement) and survival (one row per subject).

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace spajm {

// error taxonomy maps onto process exit codes: config 2, io 3, numeric 4
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class Table {
 public:
  static Table read_csv(const std::string& path);
  static Table from_csv_text(const std::string& text, const std::string& origin = "<memory>");
  void write_csv(const std::string& path) const;
  std::string to_csv_text() const;

  std::size_t nrows() const { return nrows_; }
  std::size_t ncols() const { return order_.size(); }
  const std::vector<std::string>& names() const { return order_; }
  bool has(const std::string& name) const;
  bool is_numeric(const std::string& name) const;

  const std::vector<double>& num(const std::string& name) const;
  const std::vector<std::string>& str(const std::string& name) const;
  // string view of any column (numbers formatted round-trip exact)
  std::vector<std::string> as_strings(const std::string& name) const;

  void add_num(const std::string& name, std::vector<double> v);
  void add_str(const std::string& name, std::vector<std::string> v);
  Table select_rows(const std::vector<std::size_t>& rows) const;

 private:
  std::size_t nrows_ = 0;
  std::vector<std::string> order_;
  std::map<std::string, std::vector<double>> num_;
  std::map<std::string, std::vector<std::string>> str_;
  void check_new(const std::string& name, std::size_t n);
};

// full-precision numeric formatting used by every CSV writer
std::string format_double(double x);

struct LongitudinalDataset {
  std::vector<int> id;       // subject ids, expected dense 1..n
  std::vector<double> time;
  std::vector<double> y;
  Table covariates;          // remaining columns, same row order
  int n_subjects = 0;

  static LongitudinalDataset from_table(const Table& t);
  static LongitudinalDataset read_csv(const std::string& path);
  Table to_table() const;
};

struct SurvivalDataset {
  std::vector<int> id;
  std::vector<double> time;   // observed follow-up T
  std::vector<int> event;     // 1 = event, 0 = censored
  Table covariates;
  int n_subjects = 0;

  static SurvivalDataset from_table(const Table& t);
  static SurvivalDataset read_csv(const std::string& path);
  Table to_table() const;
  std::size_t row_of(int subject_id) const;  // throws if absent
};

}  // namespace spajm

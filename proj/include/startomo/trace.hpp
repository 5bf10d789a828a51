#pragma once

#include <string>
#include <vector>

namespace startomo {

/// Step- or time-indexed table of scalar functionals. The first column is the
/// index (strictly increasing); every stored value is finite.
class FunctionalTrace {
 public:
  FunctionalTrace() = default;
  FunctionalTrace(std::string index_name, std::vector<std::string> value_names);

  const std::string& index_name() const { return index_name_; }
  const std::vector<std::string>& value_names() const { return value_names_; }

  void add_row(double index, std::vector<double> values);

  std::size_t size() const { return index_.size(); }
  bool empty() const { return index_.empty(); }
  double index(std::size_t row) const { return index_[row]; }
  const std::vector<double>& values(std::size_t row) const { return rows_[row]; }
  double value(std::size_t row, const std::string& name) const;
  std::vector<double> column(const std::string& name) const;
  const std::vector<double>& indices() const { return index_; }

  /// Header plus one line per row, 17 significant digits.
  std::string to_csv() const;

 private:
  std::size_t column_of(const std::string& name) const;

  std::string index_name_ = "step";
  std::vector<std::string> value_names_;
  std::vector<double> index_;
  std::vector<std::vector<double>> rows_;
};

}  // namespace startomo

#include "startomo/trace.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace startomo {

namespace {

std::string format17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

FunctionalTrace::FunctionalTrace(std::string index_name, std::vector<std::string> value_names)
    : index_name_(std::move(index_name)), value_names_(std::move(value_names)) {}

void FunctionalTrace::add_row(double index, std::vector<double> values) {
  if (values.size() != value_names_.size()) throw std::invalid_argument("FunctionalTrace: wrong number of values");
  if (!std::isfinite(index)) throw std::invalid_argument("FunctionalTrace: non-finite index");
  if (!index_.empty() && !(index > index_.back())) {
    throw std::invalid_argument("FunctionalTrace: index must be strictly increasing");
  }
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (!std::isfinite(values[k])) throw std::invalid_argument("FunctionalTrace: non-finite value for " + value_names_[k]);
  }
  index_.push_back(index);
  rows_.push_back(std::move(values));
}

std::size_t FunctionalTrace::column_of(const std::string& name) const {
  for (std::size_t k = 0; k < value_names_.size(); ++k) {
    if (value_names_[k] == name) return k;
  }
  throw std::out_of_range("FunctionalTrace: no column " + name);
}

double FunctionalTrace::value(std::size_t row, const std::string& name) const { return rows_.at(row)[column_of(name)]; }

std::vector<double> FunctionalTrace::column(const std::string& name) const {
  const std::size_t c = column_of(name);
  std::vector<double> out;
  out.reserve(rows_.size());
  for (const auto& row : rows_) out.push_back(row[c]);
  return out;
}

std::string FunctionalTrace::to_csv() const {
  std::string out = index_name_;
  for (const auto& name : value_names_) out += "," + name;
  out += "\n";
  for (std::size_t r = 0; r < index_.size(); ++r) {
    out += format17(index_[r]);
    for (double v : rows_[r]) out += "," + format17(v);
    out += "\n";
  }
  return out;
}

}  // namespace startomo

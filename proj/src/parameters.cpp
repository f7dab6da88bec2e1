#include "stgformer/parameters.hpp"

namespace stg {

Mat& ParameterSet::add(const std::string& name, Mat value) {
  if (contains(name)) throw std::invalid_argument("parameters: duplicate name '" + name + "'");
  index_.emplace(name, entries_.size());
  entries_.push_back({name, std::move(value)});
  return entries_.back().value;
}

const Mat& ParameterSet::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("parameters: no entry '" + name + "'");
  return entries_[it->second].value;
}

Mat& ParameterSet::get(const std::string& name) {
  return const_cast<Mat&>(static_cast<const ParameterSet&>(*this).get(name));
}

long long ParameterSet::count() const {
  long long n = 0;
  for (const auto& e : entries_) n += e.value.size();
  return n;
}

ParameterSet ParameterSet::zeros_like() const {
  ParameterSet z;
  for (const auto& e : entries_) z.add(e.name, Mat::Zero(e.value.rows(), e.value.cols()));
  return z;
}

void ParameterSet::require_congruent(const ParameterSet& other, const char* what) const {
  if (other.size() != size()) {
    throw ShapeError(std::string(what) + ": " + std::to_string(other.size()) + " tensors, expected " +
                     std::to_string(size()));
  }
  for (size_t i = 0; i < entries_.size(); ++i) {
    const auto& a = entries_[i];
    const auto& b = other.entries_[i];
    if (a.name != b.name) throw ShapeError(std::string(what) + ": expected '" + a.name + "', got '" + b.name + "'");
    require_shape(b.value, a.value.rows(), a.value.cols(), (std::string(what) + " " + a.name).c_str());
  }
}

void ParameterSet::accumulate(const std::string& name, const Mat& g) {
  Mat& dst = get(name);
  require_shape(g, dst.rows(), dst.cols(), name.c_str());
  dst += g;
}

}  // namespace stg

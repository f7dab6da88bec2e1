#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "stgformer/tensor.hpp"

namespace stg {

// Ordered collection of named learnable matrices. Vectors are stored as 1 x n.
// Also used for gradients and optimizer moments, which mirror the same names.
class ParameterSet {
 public:
  struct Entry {
    std::string name;
    Mat value;
  };

  Mat& add(const std::string& name, Mat value);

  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  const Mat& get(const std::string& name) const;
  Mat& get(const std::string& name);

  const std::vector<Entry>& entries() const { return entries_; }
  std::vector<Entry>& entries() { return entries_; }
  size_t size() const { return entries_.size(); }

  // Total scalar count.
  long long count() const;

  // Same names and shapes, all zeros.
  ParameterSet zeros_like() const;

  // Throws ShapeError unless names (in order) and shapes match.
  void require_congruent(const ParameterSet& other, const char* what) const;

  // Accumulates `g` into the named entry, which must already exist with the same shape.
  void accumulate(const std::string& name, const Mat& g);

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, size_t> index_;
};

}  // namespace stg

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dw {

// Write a file atomically (temp + rename).
void atomic_write(const std::string& path, const std::string& content);

// FNV-1a of a canonical string; used for config hashes in run manifests.
std::uint64_t fnv1a(const std::string& s);

// Least-squares slope of y against x.
double fit_slope(const std::vector<double>& x, const std::vector<double>& y);

std::string format_double(double v);  // shortest round-trip-ish (%.17g)

}  // namespace dw

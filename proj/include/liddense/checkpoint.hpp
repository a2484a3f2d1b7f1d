#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "liddense/gradcheck.hpp"
#include "liddense/nn.hpp"

// Text checkpoint, version 1:
//
//   liddense-checkpoint 1
//   parameters <count>
//   <name> <rank> <dim0> ... <dimN-1>
//   <value> <value> ...            (row-major, C99 hex-float, bit exact)
//   ...
namespace liddense::checkpoint {

inline constexpr int kFormatVersion = 1;

void save(const nn::ParameterSet& params, std::ostream& out);
void save(const nn::ParameterSet& params, const std::filesystem::path& path);

std::vector<NamedTensor> load(std::istream& in);
std::vector<NamedTensor> load(const std::filesystem::path& path);

/// Copies loaded values into a parameter set with matching names and shapes.
void apply(nn::ParameterSet& params, const std::vector<NamedTensor>& loaded);

}  // namespace liddense::checkpoint

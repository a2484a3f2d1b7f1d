#include "liddense/checkpoint.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "liddense/depth_io.hpp"

namespace liddense::checkpoint {

namespace {

std::string hexfloat(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%a", v);
  return buf;
}

double parse_double(const std::string& token) {
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (end == token.c_str() || *end != '\0') {
    throw FormatError("checkpoint: bad number '" + token + "'");
  }
  return v;
}

}  // namespace

void save(const nn::ParameterSet& params, std::ostream& out) {
  out << "liddense-checkpoint " << kFormatVersion << "\n";
  out << "parameters " << params.items().size() << "\n";
  for (const auto& item : params.items()) {
    const Tensor& t = item.tensor;
    out << item.name << " " << t.rank();
    for (std::size_t d : t.shape()) out << " " << d;
    out << "\n";
    const auto v = t.values();
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) out << ' ';
      out << hexfloat(v[i]);
    }
    out << "\n";
  }
  if (!out) throw std::runtime_error("checkpoint: write failed");
}

void save(const nn::ParameterSet& params, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  save(params, out);
}

std::vector<NamedTensor> load(std::istream& in) {
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != "liddense-checkpoint") {
    throw FormatError("checkpoint: missing header");
  }
  if (version != kFormatVersion) {
    throw FormatError("checkpoint: unsupported version " + std::to_string(version));
  }
  std::string key;
  std::size_t count = 0;
  if (!(in >> key >> count) || key != "parameters") {
    throw FormatError("checkpoint: missing parameter count");
  }
  std::vector<NamedTensor> out;
  for (std::size_t p = 0; p < count; ++p) {
    NamedTensor nt;
    std::size_t rank = 0;
    if (!(in >> nt.name >> rank)) throw FormatError("checkpoint: truncated parameter header");
    Shape shape(rank);
    for (auto& d : shape) {
      if (!(in >> d)) throw FormatError("checkpoint: truncated shape for " + nt.name);
    }
    std::vector<double> values(shape_numel(shape));
    std::string token;
    for (auto& v : values) {
      if (!(in >> token)) throw FormatError("checkpoint: truncated values for " + nt.name);
      v = parse_double(token);
    }
    nt.tensor = Tensor::from(std::move(shape), std::move(values), true);
    out.push_back(std::move(nt));
  }
  return out;
}

std::vector<NamedTensor> load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return load(in);
}

void apply(nn::ParameterSet& params, const std::vector<NamedTensor>& loaded) {
  if (loaded.size() != params.items().size()) {
    throw FormatError("checkpoint: parameter count " + std::to_string(loaded.size()) +
                      " does not match model (" + std::to_string(params.items().size()) + ")");
  }
  for (std::size_t i = 0; i < loaded.size(); ++i) {
    auto& item = params.items()[i];
    if (item.name != loaded[i].name || item.tensor.shape() != loaded[i].tensor.shape()) {
      throw FormatError("checkpoint: entry " + loaded[i].name + " " +
                        shape_string(loaded[i].tensor.shape()) + " does not match " + item.name +
                        " " + shape_string(item.tensor.shape()));
    }
    auto dst = item.tensor.mutable_values();
    const auto src = loaded[i].tensor.values();
    std::copy(src.begin(), src.end(), dst.begin());
  }
}

}  // namespace liddense::checkpoint

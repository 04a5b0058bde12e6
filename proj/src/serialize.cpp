#include "koopcast/serialize.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace koopcast {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_checkpoint(std::ostream& os, const Checkpoint& ckpt) {
  os << "koopcast-checkpoint v1\n";
  for (const auto& [k, v] : ckpt.meta) os << "meta " << k << " " << v << "\n";
  for (const auto& [k, t] : ckpt.tensors) {
    os << "tensor " << k << " " << t.rows << " " << t.cols;
    for (double x : t.data) os << " " << format_double(x);
    os << "\n";
  }
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  write_checkpoint(os, ckpt);
}

Checkpoint read_checkpoint(std::istream& is) {
  Checkpoint ckpt;
  std::string line;
  if (!std::getline(is, line) || line != "koopcast-checkpoint v1")
    throw std::runtime_error("checkpoint: bad header");
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string kind, key;
    ls >> kind >> key;
    if (kind == "meta") {
      std::string value;
      std::getline(ls, value);
      if (!value.empty() && value.front() == ' ') value.erase(0, 1);
      ckpt.meta[key] = value;
    } else if (kind == "tensor") {
      std::size_t rows = 0, cols = 0;
      ls >> rows >> cols;
      Matrix t(rows, cols);
      for (auto& x : t.data)
        if (!(ls >> x)) throw std::runtime_error("checkpoint: truncated tensor " + key);
      ckpt.tensors[key] = std::move(t);
    } else {
      throw std::runtime_error("checkpoint: unknown record kind '" + kind + "'");
    }
  }
  return ckpt;
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open: " + path);
  return read_checkpoint(is);
}

}  // namespace koopcast

#include "koopcast/data.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "koopcast/serialize.hpp"

namespace koopcast {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ls(line);
  while (std::getline(ls, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

}  // namespace

Series load_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("load_csv: cannot open " + path);

  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("load_csv: empty file " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();

  std::vector<std::string> header = split_csv_line(line);
  const bool skip_time = !header.empty() && header.front() == "time";
  const std::size_t first_col = skip_time ? 1 : 0;
  if (header.size() <= first_col)
    throw std::runtime_error("load_csv: no data columns in " + path);

  Series s;
  s.names.assign(header.begin() + first_col, header.end());
  s.channels = s.names.size();

  std::vector<double> values;
  std::size_t row_number = 1;
  while (std::getline(is, line)) {
    ++row_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw std::runtime_error("load_csv: malformed row " + std::to_string(row_number) +
                               " (" + std::to_string(cells.size()) + " cells, expected " +
                               std::to_string(header.size()) + ")");
    for (std::size_t c = first_col; c < cells.size(); ++c) {
      std::size_t pos = 0;
      double v = 0.0;
      try {
        v = std::stod(cells[c], &pos);
      } catch (const std::exception&) {
        pos = 0;
      }
      if (pos != cells[c].size() || !std::isfinite(v))
        throw std::runtime_error("load_csv: non-numeric cell '" + cells[c] + "' at row " +
                                 std::to_string(row_number) + ", column " +
                                 header[c]);
      values.push_back(v);
    }
    ++s.length;
  }
  if (s.length == 0) throw std::runtime_error("load_csv: header-only file " + path);

  s.values = Matrix(s.length, s.channels);
  s.values.data = std::move(values);
  return s;
}

void save_csv(const std::string& path, const Series& s) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("save_csv: cannot open " + path);
  for (std::size_t c = 0; c < s.channels; ++c)
    os << (c ? "," : "") << s.names[c];
  os << "\n";
  for (std::size_t t = 0; t < s.length; ++t) {
    for (std::size_t c = 0; c < s.channels; ++c)
      os << (c ? "," : "") << format_double(s.values(t, c));
    os << "\n";
  }
}

std::vector<Sample> make_windows(const Series& s, std::size_t p, std::size_t h) {
  if (s.length < p + h)
    throw std::invalid_argument("make_windows: series length " +
                                std::to_string(s.length) + " < P + H");
  const std::size_t n = s.length - p - h + 1;
  std::vector<Sample> pairs;
  pairs.reserve(n);
  for (std::size_t t = 0; t < n; ++t) {
    Sample sample;
    sample.x = Matrix(p, s.channels);
    sample.y = Matrix(h, s.channels);
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t c = 0; c < s.channels; ++c) sample.x(i, c) = s.values(t + i, c);
    for (std::size_t i = 0; i < h; ++i)
      for (std::size_t c = 0; c < s.channels; ++c)
        sample.y(i, c) = s.values(t + p + i, c);
    pairs.push_back(std::move(sample));
  }
  return pairs;
}

SplitResult chrono_split(const std::vector<Sample>& pairs, double ratio) {
  if (pairs.empty()) throw std::invalid_argument("chrono_split: no pairs");
  const std::size_t n_train = static_cast<std::size_t>(ratio * (double)pairs.size());
  if (n_train == 0 || n_train == pairs.size())
    throw std::invalid_argument("chrono_split: split would leave an empty side");
  SplitResult r;
  r.train.assign(pairs.begin(), pairs.begin() + n_train);
  r.test.assign(pairs.begin() + n_train, pairs.end());
  return r;
}

NormStats normalize(std::vector<Sample>& train, std::vector<Sample>& test) {
  if (train.empty()) throw std::invalid_argument("normalize: empty training split");
  const std::size_t d = train.front().x.cols;

  NormStats stats;
  stats.mean.assign(d, 0.0);
  stats.std.assign(d, 0.0);
  stats.flagged.assign(d, false);

  // statistics pooled from training X values only
  std::size_t count = 0;
  for (const Sample& s : train) {
    for (std::size_t i = 0; i < s.x.rows; ++i)
      for (std::size_t c = 0; c < d; ++c) stats.mean[c] += s.x(i, c);
    count += s.x.rows;
  }
  for (auto& m : stats.mean) m /= (double)count;
  for (const Sample& s : train)
    for (std::size_t i = 0; i < s.x.rows; ++i)
      for (std::size_t c = 0; c < d; ++c) {
        const double e = s.x(i, c) - stats.mean[c];
        stats.std[c] += e * e;
      }
  for (std::size_t c = 0; c < d; ++c) {
    stats.std[c] = std::sqrt(stats.std[c] / (double)count);
    if (stats.std[c] < 1e-12) {
      stats.std[c] = 1.0;
      stats.flagged[c] = true;
    }
  }

  auto apply_norm = [&](std::vector<Sample>& set) {
    for (Sample& s : set) {
      for (std::size_t i = 0; i < s.x.rows; ++i)
        for (std::size_t c = 0; c < d; ++c)
          s.x(i, c) = (s.x(i, c) - stats.mean[c]) / stats.std[c];
      for (std::size_t i = 0; i < s.y.rows; ++i)
        for (std::size_t c = 0; c < d; ++c)
          s.y(i, c) = (s.y(i, c) - stats.mean[c]) / stats.std[c];
    }
  };
  apply_norm(train);
  apply_norm(test);
  return stats;
}

void denormalize(Matrix& values, const NormStats& stats) {
  for (std::size_t i = 0; i < values.rows; ++i)
    for (std::size_t c = 0; c < values.cols; ++c)
      values(i, c) = values(i, c) * stats.std[c] + stats.mean[c];
}

SynthKind synth_kind_from_name(const std::string& name) {
  if (name == "damped_rotation") return SynthKind::DampedRotation;
  if (name == "sinusoid_ar") return SynthKind::SinusoidAr;
  if (name == "random_walk") return SynthKind::RandomWalk;
  throw std::invalid_argument("unknown synthetic kind: " + name);
}

Series synthesize_series(SynthKind kind, std::size_t t, std::size_t d, uint64_t seed,
                         double noise_scale) {
  if (t < 64) throw std::invalid_argument("synthesize_series: T must be >= 64");
  Rng rng(seed);

  Series s;
  s.length = t;
  s.channels = d;
  s.values = Matrix(t, d);
  s.names.resize(d);
  for (std::size_t c = 0; c < d; ++c) s.names[c] = "ch" + std::to_string(c);

  switch (kind) {
    case SynthKind::DampedRotation: {
      if (d % 2 != 0)
        throw std::invalid_argument("damped_rotation: requires even channel count");
      const double sigma = noise_scale < 0.0 ? 0.01 : noise_scale;
      const double rho = 0.97, theta = 0.2;
      const double c0 = std::cos(theta), s0 = std::sin(theta);
      Vector x(d, 1.0);
      for (std::size_t row = 0; row < t; ++row) {
        for (std::size_t c = 0; c < d; ++c) s.values(row, c) = x[c];
        Vector nx(d);
        for (std::size_t b = 0; b < d; b += 2) {
          nx[b] = rho * (c0 * x[b] - s0 * x[b + 1]);
          nx[b + 1] = rho * (s0 * x[b] + c0 * x[b + 1]);
        }
        if (sigma > 0.0)
          for (std::size_t c = 0; c < d; ++c) nx[c] += sigma * rng.gaussian();
        x = std::move(nx);
      }
      break;
    }
    case SynthKind::SinusoidAr: {
      const double sigma = noise_scale < 0.0 ? 0.1 : noise_scale;
      const double ar = 0.8;
      for (std::size_t c = 0; c < d; ++c) {
        // two on-grid frequencies per channel
        const double k1 = 5.0 + (double)c;
        const double k2 = 17.0 + 3.0 * (double)c;
        double noise = 0.0;
        for (std::size_t row = 0; row < t; ++row) {
          noise = ar * noise + (sigma > 0.0 ? sigma * rng.gaussian() : 0.0);
          const double phase1 = 2.0 * 3.14159265358979323846 * k1 * (double)row / (double)t;
          const double phase2 = 2.0 * 3.14159265358979323846 * k2 * (double)row / (double)t;
          s.values(row, c) = std::sin(phase1) + 0.5 * std::sin(phase2) + noise;
        }
      }
      break;
    }
    case SynthKind::RandomWalk: {
      const double sigma = noise_scale < 0.0 ? 1.0 : noise_scale;
      for (std::size_t c = 0; c < d; ++c) {
        double acc = 0.0;
        for (std::size_t row = 0; row < t; ++row) {
          acc += sigma * rng.gaussian();
          s.values(row, c) = acc;
        }
      }
      break;
    }
  }
  return s;
}

}  // namespace koopcast

#include "tvpose/track_io.h"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace tvpose {
namespace {

using json = nlohmann::json;

class RecordError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<std::string> Tokenize(const std::string& line) {
  std::istringstream ss(line);
  std::vector<std::string> tokens;
  std::string tok;
  while (ss >> tok) tokens.push_back(tok);
  return tokens;
}

double ParseDouble(const std::string& tok) {
  double value = 0.0;
  const char* end = tok.data() + tok.size();
  const auto [ptr, ec] = std::from_chars(tok.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw RecordError("not a number: '" + tok + "'");
  }
  return value;
}

int ParseInt(const std::string& tok) {
  int value = 0;
  const char* end = tok.data() + tok.size();
  const auto [ptr, ec] = std::from_chars(tok.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw RecordError("not an integer: '" + tok + "'");
  }
  return value;
}

void ExpectTokens(const std::vector<std::string>& tokens, size_t n,
                  const char* what) {
  if (tokens.size() != n) {
    throw RecordError(std::string(what) + " record needs " +
                      std::to_string(n - 1) + " fields, got " +
                      std::to_string(tokens.size() - 1));
  }
}

PointTrack ParsePoint(const std::vector<std::string>& tokens,
                      const CameraIntrinsics& K, double sigma) {
  ExpectTokens(tokens, 8, "P");
  const int id = ParseInt(tokens[1]);
  std::array<std::optional<PixelPoint>, 3> pixels;
  for (int k = 0; k < 3; ++k) {
    const double u = ParseDouble(tokens[2 + 2 * k]);
    const double v = ParseDouble(tokens[3 + 2 * k]);
    if (std::isnan(u) && std::isnan(v)) continue;
    if (!std::isfinite(u) || !std::isfinite(v)) {
      throw RecordError("non-finite coordinate in frame " + std::to_string(k));
    }
    pixels[k] = PixelPoint{u, v};
  }
  return MakePointTrack(id, pixels, K, sigma);
}

LineTrack ParseLine(const std::vector<std::string>& tokens,
                    const CameraIntrinsics& K, double sigma) {
  ExpectTokens(tokens, 14, "L");
  const int id = ParseInt(tokens[1]);
  std::array<std::array<PixelPoint, 2>, 3> endpoints;
  for (int k = 0; k < 3; ++k) {
    for (int e = 0; e < 2; ++e) {
      const double x = ParseDouble(tokens[2 + 4 * k + 2 * e]);
      const double y = ParseDouble(tokens[3 + 4 * k + 2 * e]);
      if (!std::isfinite(x) || !std::isfinite(y)) {
        throw RecordError("line endpoint missing in frame " +
                          std::to_string(k));
      }
      endpoints[k][e] = {x, y};
    }
  }
  return MakeLineTrack(id, endpoints, K, sigma);
}

std::string Format(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

json MatrixToJson(const Matrix3& M) {
  json rows = json::array();
  for (int r = 0; r < 3; ++r) rows.push_back({M(r, 0), M(r, 1), M(r, 2)});
  return rows;
}

json VectorToJson(const Vector3& v) { return {v.x(), v.y(), v.z()}; }

Matrix3 MatrixFromJson(const json& j) {
  Matrix3 M;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) M(r, c) = j.at(r).at(c).get<double>();
  }
  return M;
}

Vector3 VectorFromJson(const json& j) {
  return Vector3(j.at(0).get<double>(), j.at(1).get<double>(),
                 j.at(2).get<double>());
}

}  // namespace

IngestResult ReadTracks(std::istream& in, const IngestOptions& options) {
  IngestResult result;
  std::string line;
  int line_number = 0;
  bool have_header = false;
  bool have_K = false;
  auto fatal = [&](const std::string& msg) {
    throw std::runtime_error("line " + std::to_string(line_number) + ": " +
                             msg);
  };
  while (std::getline(in, line)) {
    ++line_number;
    const std::vector<std::string> tokens = Tokenize(line);
    if (tokens.empty() || tokens[0][0] == '#') continue;
    if (!have_header) {
      if (tokens.size() != 1 || tokens[0] != "tvp/1") {
        fatal("expected header 'tvp/1'");
      }
      have_header = true;
      continue;
    }
    if (!have_K) {
      if (tokens[0] != "K" || tokens.size() != 5) {
        fatal("expected intrinsics 'K fx fy cx cy'");
      }
      try {
        result.tracks.K = {ParseDouble(tokens[1]), ParseDouble(tokens[2]),
                           ParseDouble(tokens[3]), ParseDouble(tokens[4])};
      } catch (const RecordError& e) {
        fatal(e.what());
      }
      if (!result.tracks.K.IsValid()) fatal("invalid intrinsics");
      have_K = true;
      continue;
    }
    try {
      if (tokens[0] == "P") {
        result.tracks.points.push_back(
            ParsePoint(tokens, result.tracks.K, options.sigma_px));
      } else if (tokens[0] == "L") {
        result.tracks.lines.push_back(
            ParseLine(tokens, result.tracks.K, options.sigma_px));
      } else {
        throw RecordError("unknown record type '" + tokens[0] + "'");
      }
    } catch (const std::exception& e) {
      // RecordError for syntax, std::invalid_argument from the track
      // constructors for too few views or degenerate segments.
      if (options.strict) fatal(e.what());
      result.warnings.push_back({line_number, e.what()});
    }
  }
  if (have_header && !have_K) {
    fatal("missing intrinsics line");
  }
  return result;
}

IngestResult ReadTrackFile(const std::string& path,
                           const IngestOptions& options) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open track file: " + path);
  return ReadTracks(in, options);
}

void WriteTracks(std::ostream& out, const TrackSet& tracks) {
  const CameraIntrinsics& K = tracks.K;
  out << "tvp/1\n";
  out << "K " << Format(K.fx) << ' ' << Format(K.fy) << ' ' << Format(K.cx)
      << ' ' << Format(K.cy) << '\n';
  for (const PointTrack& t : tracks.points) {
    out << "P " << t.id;
    for (int k = 0; k < 3; ++k) {
      const double nan = std::nan("");
      out << ' ' << Format(t.Has(k) ? t.pixels[k].u : nan) << ' '
          << Format(t.Has(k) ? t.pixels[k].v : nan);
    }
    out << '\n';
  }
  for (const LineTrack& t : tracks.lines) {
    out << "L " << t.id;
    for (int k = 0; k < 3; ++k) {
      for (const PixelPoint& p : t.observations[k].endpoints) {
        out << ' ' << Format(p.u) << ' ' << Format(p.v);
      }
    }
    out << '\n';
  }
}

void WriteTrackFile(const std::string& path, const TrackSet& tracks) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write track file: " + path);
  WriteTracks(out, tracks);
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string GroundTruthJson(const ThreeViewScene& scene) {
  json j;
  j["format"] = "tvp-gt/1";
  j["R10"] = MatrixToJson(scene.R10);
  j["R12"] = MatrixToJson(scene.R12);
  j["t_G"] = {VectorToJson(scene.t_G[0]), VectorToJson(scene.t_G[1]),
              VectorToJson(scene.t_G[2])};
  j["point_outliers"] = scene.point_outliers;
  j["line_outliers"] = scene.line_outliers;
  j["mode"] = std::string(ToString(scene.config.mode));
  j["seed"] = scene.config.rng_seed;
  j["noise_std"] = scene.config.noise_std;
  return j.dump(2);
}

GroundTruth ParseGroundTruthJson(const std::string& text) {
  try {
    const json j = json::parse(text);
    GroundTruth gt;
    gt.R10 = MatrixFromJson(j.at("R10"));
    gt.R12 = MatrixFromJson(j.at("R12"));
    for (int k = 0; k < 3; ++k) gt.t_G[k] = VectorFromJson(j.at("t_G").at(k));
    gt.point_outliers = j.value("point_outliers", std::vector<bool>{});
    gt.line_outliers = j.value("line_outliers", std::vector<bool>{});
    return gt;
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("bad ground truth JSON: ") +
                             e.what());
  }
}

Vector3 GroundTruth::t01() const { return t_G[1] - t_G[0]; }

Vector3 GroundTruth::t12() const { return R10 * (t_G[2] - t_G[1]); }

}  // namespace tvpose

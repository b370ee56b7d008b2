#include <tvflow/io.hpp>

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <unistd.h>

namespace tvflow::io {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::filesystem::path& path, const std::string& what) {
  throw std::runtime_error(path.string() + ": " + what);
}

[[noreturn]] void fail(const std::filesystem::path& path, int line, const std::string& what) {
  throw std::runtime_error(path.string() + ":" + std::to_string(line) + ": " + what);
}

std::string shortest(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::vector<std::vector<double>> parse_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(path, "cannot open");
  std::vector<std::vector<double>> rows;
  std::string line;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::vector<double> row;
    const char* p = line.data();
    const char* end = p + line.size();
    while (p != end) {
      if (std::isspace(static_cast<unsigned char>(*p)) || *p == ',') {
        ++p;
        continue;
      }
      double v = 0.0;
      const auto res = std::from_chars(p, end, v);
      if (res.ec != std::errc())
        fail(path, lineno, "bad number '" + std::string(p, end) + "'");
      row.push_back(v);
      p = res.ptr;
      if (p != end && !std::isspace(static_cast<unsigned char>(*p)) && *p != ',')
        fail(path, lineno, "bad number '" + std::string(p, end) + "'");
    }
    if (row.empty()) continue;  // blank or comment-only line
    if (!rows.empty() && row.size() != rows.front().size())
      fail(path, lineno,
           "expected " + std::to_string(rows.front().size()) + " fields, got " +
               std::to_string(row.size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) fail(path, "no data");
  return rows;
}

// ---- PGM ----

// header tokens are whitespace-separated with '#' comments running to EOL
std::string pgm_token(std::istream& in, const std::filesystem::path& path) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  if (tok.empty()) fail(path, "truncated header");
  return tok;
}

long pgm_int(std::istream& in, const std::filesystem::path& path) {
  const std::string tok = pgm_token(in, path);
  long v = 0;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
    fail(path, "bad header token '" + tok + "'");
  return v;
}

std::filesystem::path temp_name(const std::filesystem::path& path) {
  static std::atomic<unsigned> counter{0};
  auto tmp = path;
  tmp += ".tmp" + std::to_string(::getpid()) + "-" + std::to_string(counter++);
  return tmp;
}

json signal_json(const Signal& s) {
  json a = json::array();
  for (Eigen::Index i = 0; i < s.size(); ++i) a.push_back(s[i]);
  return a;
}

json columns_json(const Eigen::MatrixXd& m) {
  json a = json::array();
  for (Eigen::Index c = 0; c < m.cols(); ++c) a.push_back(signal_json(m.col(c)));
  return a;
}

Signal json_signal(const json& a, const std::string& what) {
  if (!a.is_array()) throw std::runtime_error(what + ": expected an array");
  Signal s(a.size());
  Eigen::Index i = 0;
  for (const auto& v : a) {
    if (!v.is_number()) throw std::runtime_error(what + ": expected numbers");
    s[i++] = v.get<double>();
  }
  return s;
}

const json& field(const json& j, const char* key, const std::string& what) {
  const auto it = j.find(key);
  if (it == j.end()) throw std::runtime_error(what + ": missing field '" + key + "'");
  return *it;
}

json parse(const std::string& text, const std::string& what) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw std::runtime_error(what + ": not valid JSON");
  if (!j.is_object()) throw std::runtime_error(what + ": expected an object");
  return j;
}

}  // namespace

Image read_matrix(const std::filesystem::path& path) {
  const auto rows = parse_table(path);
  Image m(rows.size(), rows.front().size());
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = rows[r][c];
  return m;
}

void write_matrix(const std::filesystem::path& path, const Image& m) {
  std::string out;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out += ',';
      out += shortest(m(r, c));
    }
    out += '\n';
  }
  write_text(path, out);
}

Signal read_signal(const std::filesystem::path& path) {
  const Image m = read_matrix(path);
  if (m.cols() == 1) return m.col(0);
  if (m.rows() == 1) return m.row(0).transpose();
  fail(path, "expected a single row or column, got " + std::to_string(m.rows()) + "x" +
                 std::to_string(m.cols()));
}

void write_signal(const std::filesystem::path& path, const Signal& s) {
  std::string out;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    out += shortest(s[i]);
    out += '\n';
  }
  write_text(path, out);
}

Image read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open");
  const std::string magic = pgm_token(in, path);
  if (magic != "P2" && magic != "P5") fail(path, "not a PGM file (magic '" + magic + "')");
  const long w = pgm_int(in, path), h = pgm_int(in, path), maxval = pgm_int(in, path);
  if (w < 1 || h < 1) fail(path, "bad dimensions");
  if (maxval < 1 || maxval > 65535) fail(path, "maxval out of range");
  Image img(h, w);
  if (magic == "P2") {
    for (long r = 0; r < h; ++r)
      for (long c = 0; c < w; ++c) {
        const long v = pgm_int(in, path);
        if (v < 0 || v > maxval) fail(path, "sample out of range");
        img(r, c) = static_cast<double>(v) / static_cast<double>(maxval);
      }
  } else {
    // single whitespace byte after maxval, then raw samples
    const int bytes = maxval > 255 ? 2 : 1;
    std::vector<unsigned char> buf(static_cast<size_t>(w) * h * bytes);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() != static_cast<std::streamsize>(buf.size())) fail(path, "truncated pixel data");
    const unsigned char* p = buf.data();
    for (long r = 0; r < h; ++r)
      for (long c = 0; c < w; ++c) {
        long v = *p++;
        if (bytes == 2) v = (v << 8) | *p++;  // big-endian
        if (v > maxval) fail(path, "sample out of range");
        img(r, c) = static_cast<double>(v) / static_cast<double>(maxval);
      }
  }
  return img;
}

void write_pgm(const std::filesystem::path& path, const Image& img, int maxval, bool ascii) {
  if (img.size() == 0) throw std::invalid_argument("write_pgm: empty image");
  if (maxval < 1 || maxval > 65535) throw std::invalid_argument("write_pgm: bad maxval");
  std::string out = ascii ? "P2\n" : "P5\n";
  out += std::to_string(img.cols()) + " " + std::to_string(img.rows()) + "\n" +
         std::to_string(maxval) + "\n";
  const auto quantize = [&](double v) {
    v = std::min(std::max(v, 0.0), 1.0);
    return static_cast<long>(std::lround(v * maxval));
  };
  if (ascii) {
    for (Eigen::Index r = 0; r < img.rows(); ++r) {
      int on_line = 0;
      for (Eigen::Index c = 0; c < img.cols(); ++c) {
        out += std::to_string(quantize(img(r, c)));
        out += (++on_line % 16 == 0 || c + 1 == img.cols()) ? '\n' : ' ';
      }
    }
  } else {
    for (Eigen::Index r = 0; r < img.rows(); ++r)
      for (Eigen::Index c = 0; c < img.cols(); ++c) {
        const long v = quantize(img(r, c));
        if (maxval > 255) out.push_back(static_cast<char>((v >> 8) & 0xff));
        out.push_back(static_cast<char>(v & 0xff));
      }
  }
  write_text(path, out);
}

Image read_image(const std::filesystem::path& path) {
  return path.extension() == ".pgm" ? read_pgm(path) : read_matrix(path);
}

std::string to_json(const tv1d::PiecewiseFlow& flow) {
  json j;
  j["initial"] = signal_json(flow.initial);
  j["times"] = flow.times;
  json subs = json::array();
  for (const auto& p : flow.subgradients) subs.push_back(signal_json(p));
  j["subgradients"] = std::move(subs);
  return j.dump();
}

tv1d::PiecewiseFlow flow_from_json(const std::string& text) {
  const std::string what = "flow json";
  const json j = parse(text, what);
  tv1d::PiecewiseFlow flow;
  flow.initial = json_signal(field(j, "initial", what), what);
  if (flow.initial.size() == 0) throw std::runtime_error(what + ": empty initial signal");
  const auto& times = field(j, "times", what);
  if (!times.is_array()) throw std::runtime_error(what + ": 'times' must be an array");
  flow.times.assign(times.begin(), times.end());
  double prev = 0.0;
  for (double t : flow.times) {
    if (!(t > prev)) throw std::runtime_error(what + ": times must be positive and increasing");
    prev = t;
  }
  const auto& subs = field(j, "subgradients", what);
  if (!subs.is_array() || subs.size() != flow.times.size())
    throw std::runtime_error(what + ": need one subgradient per time");
  for (const auto& s : subs) {
    flow.subgradients.push_back(json_signal(s, what));
    if (flow.subgradients.back().size() != flow.initial.size())
      throw std::runtime_error(what + ": subgradient length mismatch");
  }
  return flow;
}

std::string to_json(const spectral::SpectralSet& set) {
  json j;
  j["length"] = set.length;
  j["mean"] = set.mean;
  j["lambdas"] = set.lambdas;
  json phis = json::array();
  for (const auto& phi : set.phis) phis.push_back(signal_json(phi));
  j["phis"] = std::move(phis);
  return j.dump();
}

spectral::SpectralSet spectrum_from_json(const std::string& text) {
  const std::string what = "spectrum json";
  const json j = parse(text, what);
  spectral::SpectralSet set;
  const auto& len = field(j, "length", what);
  if (!len.is_number_integer() || len.get<int>() < 1)
    throw std::runtime_error(what + ": bad length");
  set.length = len.get<int>();
  const auto& mean = field(j, "mean", what);
  if (!mean.is_number()) throw std::runtime_error(what + ": bad mean");
  set.mean = mean.get<double>();
  const auto& lambdas = field(j, "lambdas", what);
  if (!lambdas.is_array()) throw std::runtime_error(what + ": 'lambdas' must be an array");
  set.lambdas.assign(lambdas.begin(), lambdas.end());
  double prev = -std::numeric_limits<double>::infinity();
  for (double l : set.lambdas) {
    if (!(l > prev) || !(l < 0.0))
      throw std::runtime_error(what + ": lambdas must be negative and increasing");
    prev = l;
  }
  const auto& phis = field(j, "phis", what);
  if (!phis.is_array() || phis.size() != set.lambdas.size())
    throw std::runtime_error(what + ": need one phi per lambda");
  for (const auto& phi : phis) {
    set.phis.push_back(json_signal(phi, what));
    if (set.phis.back().size() != set.length)
      throw std::runtime_error(what + ": phi length mismatch");
  }
  return set;
}

std::string to_json(const std::vector<rdmd::SegmentModes>& segments) {
  json out = json::array();
  for (const auto& seg : segments) {
    json j;
    j["tau_lo"] = seg.tau_lo;
    j["tau_hi"] = seg.tau_hi;
    j["dt"] = seg.dt;
    j["xi1"] = signal_json(seg.xi1);
    j["xi2"] = signal_json(seg.xi2);
    j["eigenvalues"] = signal_json(seg.eigenvalues);
    j["coefficients"] = signal_json(seg.coefficients);
    j["modes"] = columns_json(seg.modes);
    j["recon_rel_error"] = seg.recon_rel_error;
    out.push_back(std::move(j));
  }
  return out.dump();
}

std::string to_json(const kmd::FitResult& fit) {
  json j;
  j["lambdas"] = fit.lambdas;
  json modes = json::array();
  for (const auto& m : fit.modes) modes.push_back(signal_json(m));
  j["modes"] = std::move(modes);
  j["residual"] = fit.residual;
  j["residual_history"] = fit.residual_history;
  j["degenerate"] = fit.degenerate;
  return j.dump();
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) fail(path, "read failed");
  return std::move(buf).str();
}

void write_text(const std::filesystem::path& path, const std::string& content) {
  const auto tmp = temp_name(path);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(tmp, "cannot open for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      fail(tmp, "write failed");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    fail(path, "rename failed");
  }
}

}  // namespace tvflow::io

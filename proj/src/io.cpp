#include "buckrom/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "buckrom/error.hpp"

namespace buckrom {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(line);
  while (std::getline(in, item, ',')) {
    while (!item.empty() && (item.back() == '\r' || item.back() == ' ')) item.pop_back();
    while (!item.empty() && item.front() == ' ') item.erase(item.begin());
    out.push_back(item);
  }
  return out;
}

}  // namespace

void write_diagram_csv(std::ostream& out, const std::vector<Branch>& branches,
                       const DiagramColumns& cols) {
  out << "mu";
  if (cols.mu_g) out << ",mu_g";
  if (cols.material) out << ",E,nu";
  out << ",s,newton_iters,converged\n";
  for (const auto& b : branches) {
    for (const auto& p : b.points) {
      out << num(p.mu);
      if (cols.mu_g) out << ',' << num(b.base.mu_g);
      if (cols.material) out << ',' << num(b.base.young) << ',' << num(b.base.poisson);
      out << ',' << num(p.s) << ',' << p.newton_iters << ',' << (p.converged ? 1 : 0) << '\n';
    }
  }
}

Diagram read_diagram_csv(std::istream& in, const std::string& origin) {
  auto fail = [&](int line, const std::string& why) {
    std::ostringstream os;
    os << origin << ":" << line << ": " << why;
    throw Error(ErrorCode::kIo, os.str());
  };
  std::string line;
  if (!std::getline(in, line)) fail(1, "empty diagram file");
  const auto header = split_csv(line);
  auto col = [&](const std::string& name) -> int {
    auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : static_cast<int>(it - header.begin());
  };
  const int c_mu = col("mu"), c_s = col("s"), c_it = col("newton_iters"), c_conv = col("converged");
  const int c_g = col("mu_g"), c_E = col("E"), c_nu = col("nu");
  if (c_mu < 0 || c_s < 0 || c_conv < 0) fail(1, "header must contain mu, s and converged");
  Diagram d;
  d.cols.mu_g = c_g >= 0;
  d.cols.material = c_E >= 0 && c_nu >= 0;
  int ln = 1;
  while (std::getline(in, line)) {
    ++ln;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv(line);
    if (f.size() != header.size()) fail(ln, "wrong number of fields");
    auto get = [&](int c) {
      try {
        std::size_t pos = 0;
        const double v = std::stod(f[static_cast<std::size_t>(c)], &pos);
        if (pos != f[static_cast<std::size_t>(c)].size()) throw std::invalid_argument("");
        return v;
      } catch (const std::exception&) {
        fail(ln, "bad number '" + f[static_cast<std::size_t>(c)] + "'");
      }
      return 0.0;
    };
    DiagramRow r;
    r.mu = get(c_mu);
    r.s = get(c_s);
    r.converged = get(c_conv) != 0.0;
    if (c_it >= 0) r.newton_iters = static_cast<int>(get(c_it));
    if (c_g >= 0) r.mu_g = get(c_g);
    if (d.cols.material) {
      r.young = get(c_E);
      r.poisson = get(c_nu);
    }
    d.rows.push_back(r);
  }
  return d;
}

Diagram read_diagram_csv(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::kIo, "cannot open diagram " + path.string());
  return read_diagram_csv(f, path.string());
}

std::vector<Branch> diagram_branches(const Diagram& d) {
  std::vector<Branch> out;
  for (const auto& r : d.rows) {
    const bool same = !out.empty() && out.back().base.mu_g == r.mu_g &&
                      out.back().base.young == r.young && out.back().base.poisson == r.poisson;
    if (!same) {
      Branch b;
      b.base.mu_g = r.mu_g;
      b.base.young = r.young;
      b.base.poisson = r.poisson;
      out.push_back(b);
    }
    BranchPoint p;
    p.mu = r.mu;
    p.s = r.s;
    p.newton_iters = r.newton_iters;
    p.converged = r.converged;
    out.back().points.push_back(p);
  }
  return out;
}

void write_error_csv(std::ostream& out, const RbErrorReport& report) {
  out << "mu,error,reference_norm,s_reduced,s_full\n";
  for (const auto& p : report.points) {
    out << num(p.mu) << ',' << num(p.error) << ',' << num(p.reference_norm) << ','
        << num(p.s_reduced) << ',' << num(p.s_full) << '\n';
  }
}

namespace {

std::string xml_escape(const std::string& s) {
  std::string r;
  for (char c : s) {
    switch (c) {
      case '<': r += "&lt;"; break;
      case '>': r += "&gt;"; break;
      case '&': r += "&amp;"; break;
      case '"': r += "&quot;"; break;
      default: r += c;
    }
  }
  return r;
}

}  // namespace

void write_svg_plot(std::ostream& out, const std::vector<PlotSeries>& series,
                    const std::string& title, const std::string& xlabel,
                    const std::string& ylabel) {
  const double W = 640, H = 420, L = 70, R = 20, T = 40, B = 50;
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& s : series) {
    for (std::size_t k = 0; k < s.x.size() && k < s.y.size(); ++k) {
      if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k])) continue;
      x0 = std::min(x0, s.x[k]);
      x1 = std::max(x1, s.x[k]);
      y0 = std::min(y0, s.y[k]);
      y1 = std::max(y1, s.y[k]);
    }
  }
  if (!(x1 > x0)) { x0 = std::isfinite(x0) ? x0 - 0.5 : 0.0; x1 = x0 + 1.0; }
  if (!(y1 > y0)) { y0 = std::isfinite(y0) ? y0 - 0.5 : 0.0; y1 = y0 + 1.0; }
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                 "#9467bd", "#8c564b", "#e377c2", "#17becf"};
  char buf[160];
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << xml_escape(title)
      << "</text>\n";
  std::snprintf(buf, sizeof buf,
                "<rect x=\"%g\" y=\"%g\" width=\"%g\" height=\"%g\" fill=\"none\" stroke=\"black\"/>\n",
                L, T, W - L - R, H - T - B);
  out << buf;
  for (int k = 0; k <= 4; ++k) {
    const double xv = x0 + (x1 - x0) * k / 4, yv = y0 + (y1 - y0) * k / 4;
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">%.4g</text>\n",
                  px(xv), H - B + 16, xv);
    out << buf;
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\">%.3g</text>\n",
                  L - 4, py(yv) + 4, yv);
    out << buf;
  }
  out << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">"
      << xml_escape(xlabel) << "</text>\n";
  out << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << (T + H - B) / 2 << ")\">" << xml_escape(ylabel) << "</text>\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    const char* c = colors[i % 8];
    out << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t k = 0; k < s.x.size() && k < s.y.size(); ++k) {
      if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k])) continue;
      std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(s.x[k]), py(s.y[k]));
      out << buf;
    }
    out << "\"/>\n";
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" fill=\"%s\">", L + 8,
                  T + 16 + 14.0 * static_cast<double>(i), c);
    out << buf << xml_escape(s.label) << "</text>\n";
  }
  out << "</svg>\n";
}

namespace {

class Writer {
 public:
  void u32(std::uint32_t v) {
    for (int k = 0; k < 4; ++k) buf_.push_back(static_cast<char>((v >> (8 * k)) & 0xff));
  }
  void u64(std::uint64_t v) {
    for (int k = 0; k < 8; ++k) buf_.push_back(static_cast<char>((v >> (8 * k)) & 0xff));
  }
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void tag(const char* t) {
    char b[8] = {' ', ' ', ' ', ' ', ' ', ' ', ' ', ' '};
    std::memcpy(b, t, std::min<std::size_t>(8, std::strlen(t)));
    buf_.append(b, 8);
  }
  void matrix(const DenseMatrix& M) {
    u64(static_cast<std::uint64_t>(M.rows()));
    u64(static_cast<std::uint64_t>(M.cols()));
    for (Eigen::Index j = 0; j < M.cols(); ++j)
      for (Eigen::Index i = 0; i < M.rows(); ++i) f64(M(i, j));
  }
  void vector(const Vector& v) {
    u64(static_cast<std::uint64_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) f64(v[i]);
  }
  void raw(const std::string& s) { buf_ += s; }
  const std::string& bytes() const { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  Reader(const std::string& data, std::string origin) : d_(data), origin_(std::move(origin)) {}

  [[noreturn]] void fail(const std::string& why) const {
    throw Error(ErrorCode::kIo, origin_ + ": " + why);
  }
  void need(std::size_t n) const {
    if (pos_ + n > d_.size()) fail("truncated file");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v |= std::uint32_t(static_cast<unsigned char>(d_[pos_ + k])) << (8 * k);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int k = 0; k < 8; ++k) v |= std::uint64_t(static_cast<unsigned char>(d_[pos_ + k])) << (8 * k);
    pos_ += 8;
    return v;
  }
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s = d_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::uint64_t count(std::size_t elem) {
    const std::uint64_t n = u64();
    if (n > (d_.size() - pos_) / elem + 1) fail("size field exceeds the remaining data");
    return n;
  }
  DenseMatrix matrix() {
    const auto r = u64();
    const auto c = u64();
    if (c != 0 && r > (d_.size() - pos_) / 8 / c) fail("matrix size exceeds the remaining data");
    DenseMatrix M(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    for (Eigen::Index j = 0; j < M.cols(); ++j)
      for (Eigen::Index i = 0; i < M.rows(); ++i) M(i, j) = f64();
    return M;
  }
  Vector vector() {
    const auto n = count(8);
    Vector v(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = f64();
    return v;
  }
  bool done() const { return pos_ == d_.size(); }

 private:
  const std::string& d_;
  std::string origin_;
  std::size_t pos_ = 0;
};

constexpr char kArtifactMagic[] = "BROMART1";
constexpr char kStateMagic[] = "BRSTATE1";

std::string slurp(std::istream& in) {
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

void write_artifact(std::ostream& out, const ArtifactBundle& b) {
  std::vector<std::pair<const char*, std::string>> sections;
  {
    Writer w;
    w.u64(b.mesh_fingerprint);
    w.i64(b.dofs);
    sections.emplace_back("FINGERPR", w.bytes());
  }
  {
    Writer w;
    w.f64(b.basis.tolerance);
    w.matrix(b.basis.V);
    w.vector(b.basis.sigma);
    sections.emplace_back("PODBASIS", w.bytes());
  }
  if (b.deim) {
    Writer w;
    w.i64(b.deim->active);
    w.matrix(b.deim->H);
    w.u64(b.deim->indices.size());
    for (auto i : b.deim->indices) w.i64(i);
    w.vector(b.deim->sigma);
    sections.emplace_back("DEIMMODL", w.bytes());
  }
  Writer w;
  w.raw(std::string(kArtifactMagic, 8));
  w.u32(1);
  w.u32(static_cast<std::uint32_t>(sections.size()));
  for (const auto& [tag, payload] : sections) {
    w.tag(tag);
    w.u64(payload.size());
    w.raw(payload);
  }
  out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
  if (!out) throw Error(ErrorCode::kIo, "failed to write artifact");
}

void write_artifact(const std::filesystem::path& path, const ArtifactBundle& bundle) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kIo, "cannot create " + path.string());
  write_artifact(f, bundle);
}

ArtifactBundle read_artifact(std::istream& in, const std::string& origin) {
  const std::string data = slurp(in);
  Reader r(data, origin);
  if (r.bytes(8) != std::string(kArtifactMagic, 8)) r.fail("not an artifact file");
  if (r.u32() != 1) r.fail("unsupported artifact version");
  const auto nsec = r.u32();
  ArtifactBundle b;
  bool have_fp = false, have_basis = false;
  for (std::uint32_t k = 0; k < nsec; ++k) {
    std::string tag = r.bytes(8);
    const auto len = r.count(1);
    const std::string payload = r.bytes(len);
    Reader s(payload, origin + " [" + tag + "]");
    if (tag == "FINGERPR") {
      b.mesh_fingerprint = s.u64();
      b.dofs = s.i64();
      have_fp = true;
    } else if (tag == "PODBASIS") {
      b.basis.tolerance = s.f64();
      b.basis.V = s.matrix();
      b.basis.sigma = s.vector();
      have_basis = true;
    } else if (tag == "DEIMMODL") {
      DeimModel m;
      m.active = static_cast<int>(s.i64());
      m.H = s.matrix();
      const auto n = s.count(8);
      for (std::uint64_t i = 0; i < n; ++i) m.indices.push_back(static_cast<Eigen::Index>(s.i64()));
      m.sigma = s.vector();
      if (static_cast<Eigen::Index>(m.indices.size()) != m.H.cols() || m.active < 1 ||
          m.active > m.available()) {
        s.fail("inconsistent DEIM section");
      }
      for (auto i : m.indices) {
        if (i < 0 || i >= m.H.rows()) s.fail("DEIM index out of range");
      }
      b.deim = std::move(m);
    } else {
      continue;
    }
    if (!s.done()) s.fail("trailing bytes in section");
  }
  if (!have_fp || !have_basis) r.fail("missing FINGERPR or PODBASIS section");
  if (b.basis.V.rows() != b.dofs) r.fail("basis rows do not match the recorded DoF count");
  return b;
}

ArtifactBundle read_artifact(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kIo, "cannot open artifact " + path.string());
  return read_artifact(f, path.string());
}

void write_branch_states(std::ostream& out, const Branch& branch) {
  std::vector<const BranchPoint*> pts;
  Eigen::Index n = 0;
  for (const auto& p : branch.points) {
    if (!p.converged || p.u.size() == 0) continue;
    if (n == 0) n = p.u.size();
    if (p.u.size() != n) throw Error(ErrorCode::kInvalidArgument, "branch states differ in size");
    pts.push_back(&p);
  }
  Writer w;
  w.raw(std::string(kStateMagic, 8));
  w.u64(static_cast<std::uint64_t>(n));
  w.u64(pts.size());
  for (const auto* p : pts) {
    w.f64(p->mu);
    for (Eigen::Index i = 0; i < n; ++i) w.f64(p->u[i]);
  }
  out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
  if (!out) throw Error(ErrorCode::kIo, "failed to write branch states");
}

BranchStates read_branch_states(std::istream& in) {
  const std::string data = slurp(in);
  Reader r(data, "branch states");
  if (r.bytes(8) != std::string(kStateMagic, 8)) r.fail("not a branch state file");
  const auto n = r.u64();
  const auto count = r.u64();
  if (count != 0 && (n + 1) > data.size() / 8 / count) r.fail("header exceeds the file size");
  BranchStates s;
  for (std::uint64_t k = 0; k < count; ++k) {
    s.mu.push_back(r.f64());
    Vector u(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = r.f64();
    s.u.push_back(std::move(u));
  }
  if (!r.done()) r.fail("trailing bytes");
  return s;
}

}  // namespace buckrom

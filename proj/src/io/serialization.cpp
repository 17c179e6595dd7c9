#include "tmsqz/io.hpp"

#include <cctype>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace tmsqz::io {

namespace {

constexpr char kMagic[8] = {'T', 'M', 'S', 'Q', 'F', 'R', 'M', '1'};
constexpr std::uint32_t kVersion = 1;

double parse_double(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r' || s.back() == '\t')) s.remove_suffix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw std::invalid_argument("io: cannot parse number '" + std::string(s) + "'");
  }
  return v;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

// Numeric rows of a CSV stream; comment lines and a non-numeric header are skipped.
std::vector<std::vector<double>> read_rows(std::istream& is, std::vector<std::string>* comments = nullptr) {
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line == "\r") continue;
    if (line.front() == '#') {
      if (comments) comments->push_back(line.substr(1));
      continue;
    }
    const char c = line.front();
    if (rows.empty() && !(std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' || c == '.')) {
      continue;  // header
    }
    std::vector<double> row;
    for (auto f : split(line, ',')) row.push_back(parse_double(f));
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_comments(std::ostream& os, const Comments& comments) {
  for (const auto& c : comments) os << "# " << c << '\n';
}

template <typename T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::invalid_argument("io: truncated frame file");
  return v;
}

const char* kind_name(homodyne::FrameKind k) {
  return k == homodyne::FrameKind::signal ? "signal" : "vacuum_reference";
}

homodyne::FrameKind kind_from(std::string_view s) {
  if (s == "signal") return homodyne::FrameKind::signal;
  if (s == "vacuum_reference") return homodyne::FrameKind::vacuum_reference;
  throw std::invalid_argument("io: unknown frame kind '" + std::string(s) + "'");
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

json to_json(const pump::AwgProgram& prog) {
  return {{"sample_rate_hz", prog.sample_rate_hz},
          {"trigger_offset_s", prog.trigger_offset_s},
          {"samples_v", prog.samples_v}};
}

pump::AwgProgram awg_from_json(const json& j) {
  pump::AwgProgram p;
  p.sample_rate_hz = j.at("sample_rate_hz").get<double>();
  p.trigger_offset_s = j.value("trigger_offset_s", 0.0);
  p.samples_v = j.at("samples_v").get<std::vector<double>>();
  if (!(p.sample_rate_hz > 0.0)) throw std::invalid_argument("awg json: sample_rate_hz must be > 0");
  if (p.samples_v.empty()) throw std::invalid_argument("awg json: no samples");
  return p;
}

void write_awg_csv(std::ostream& os, const pump::AwgProgram& prog, const Comments& comments) {
  write_comments(os, comments);
  os << "time_s,volts\n";
  for (std::size_t i = 0; i < prog.samples_v.size(); ++i) {
    os << format_double(prog.time_at(i)) << ',' << format_double(prog.samples_v[i]) << '\n';
  }
}

pump::AwgProgram read_awg_csv(std::istream& is) {
  const auto rows = read_rows(is);
  if (rows.size() < 2) throw std::invalid_argument("awg csv: need at least 2 samples");
  pump::AwgProgram p;
  const double dt = rows[1].at(0) - rows[0].at(0);
  if (!(dt > 0.0)) throw std::invalid_argument("awg csv: time must increase");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != 2) throw std::invalid_argument("awg csv: expected 2 columns");
    const double expect = rows[0][0] + static_cast<double>(i) * dt;
    if (std::abs(rows[i][0] - expect) > 1e-6 * dt) throw std::invalid_argument("awg csv: non-uniform time grid");
    p.samples_v.push_back(rows[i][1]);
  }
  p.sample_rate_hz = 1.0 / dt;
  p.trigger_offset_s = rows[0][0];
  return p;
}

json to_json(const CalibrationFile& f) {
  const auto& c = f.calibration;
  json lut = json::array();
  for (const auto& pt : c.extended_lut) lut.push_back({{"v", pt.v}, {"p_mw", pt.p_mw}});
  json j = {{"quad_coeff", c.quad_coeff},
            {"linear_limit", c.linear_limit},
            {"extended_lut", lut},
            {"gain_coeff", c.gain_coeff},
            {"max_pump_power", c.max_pump_power}};
  if (f.gain_fit) j["gain_fit"] = {{"gain_coeff", f.gain_fit->gain_coeff}, {"fit_residual", f.gain_fit->fit_residual}};
  if (f.loss_budget) {
    const auto& b = *f.loss_budget;
    j["loss_budget"] = {{"opa_internal", b.opa_internal},
                        {"propagation", b.propagation},
                        {"mode_matching", b.mode_matching},
                        {"photodiode", b.photodiode},
                        {"total", b.total()}};
  }
  return j;
}

CalibrationFile calibration_from_json(const json& j) {
  CalibrationFile f;
  auto& c = f.calibration;
  c.quad_coeff = j.value("quad_coeff", c.quad_coeff);
  c.linear_limit = j.value("linear_limit", c.linear_limit);
  c.gain_coeff = j.value("gain_coeff", c.gain_coeff);
  c.max_pump_power = j.value("max_pump_power", c.max_pump_power);
  if (j.contains("extended_lut")) {
    for (const auto& pt : j.at("extended_lut")) c.extended_lut.push_back({pt.at("v").get<double>(), pt.at("p_mw").get<double>()});
  }
  if (j.contains("gain_fit")) {
    f.gain_fit = opa::GainFit{j["gain_fit"].at("gain_coeff").get<double>(), j["gain_fit"].value("fit_residual", 0.0)};
  }
  if (j.contains("loss_budget")) {
    const auto& b = j["loss_budget"];
    opa::LossBudget lb;
    lb.opa_internal = b.value("opa_internal", lb.opa_internal);
    lb.propagation = b.value("propagation", lb.propagation);
    lb.mode_matching = b.value("mode_matching", lb.mode_matching);
    lb.photodiode = b.value("photodiode", lb.photodiode);
    opa::validate(lb);
    f.loss_budget = lb;
  }
  pump::validate(c);
  return f;
}

CalibrationFile load_calibration(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::parse_error&) {
    throw std::invalid_argument("calibration: " + path.string() + " is not valid JSON");
  }
  return calibration_from_json(j);
}

void write_frames_binary(std::ostream& os, const homodyne::FrameSet& fs) {
  homodyne::validate(fs);
  os.write(kMagic, sizeof(kMagic));
  put(os, kVersion);
  put(os, static_cast<std::uint32_t>(fs.kind));
  put(os, fs.rng_seed);
  put(os, fs.dt);
  put(os, fs.t0);
  put(os, static_cast<std::uint64_t>(fs.n_frames()));
  put(os, static_cast<std::uint64_t>(fs.n_samples));
  os.write(reinterpret_cast<const char*>(fs.phase_tags.data()),
           static_cast<std::streamsize>(fs.phase_tags.size() * sizeof(double)));
  os.write(reinterpret_cast<const char*>(fs.data.data()),
           static_cast<std::streamsize>(fs.data.size() * sizeof(double)));
}

homodyne::FrameSet read_frames_binary(std::istream& is) {
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) throw std::invalid_argument("frames: bad magic");
  if (get<std::uint32_t>(is) != kVersion) throw std::invalid_argument("frames: unsupported version");
  homodyne::FrameSet fs;
  const auto kind = get<std::uint32_t>(is);
  if (kind > 1) throw std::invalid_argument("frames: unknown kind");
  fs.kind = static_cast<homodyne::FrameKind>(kind);
  fs.rng_seed = get<std::uint64_t>(is);
  fs.dt = get<double>(is);
  fs.t0 = get<double>(is);
  const auto n_frames = get<std::uint64_t>(is);
  fs.n_samples = get<std::uint64_t>(is);
  if (n_frames > (1ull << 32) || fs.n_samples > (1ull << 32)) throw std::invalid_argument("frames: implausible size");
  fs.phase_tags.resize(n_frames);
  fs.data.resize(n_frames * fs.n_samples);
  is.read(reinterpret_cast<char*>(fs.phase_tags.data()), static_cast<std::streamsize>(n_frames * sizeof(double)));
  is.read(reinterpret_cast<char*>(fs.data.data()), static_cast<std::streamsize>(fs.data.size() * sizeof(double)));
  if (!is) throw std::invalid_argument("frames: truncated file");
  homodyne::validate(fs);
  return fs;
}

void write_frames_csv(std::ostream& os, const homodyne::FrameSet& fs) {
  homodyne::validate(fs);
  os << "# dt=" << format_double(fs.dt) << " t0=" << format_double(fs.t0) << " kind=" << kind_name(fs.kind)
     << " seed=" << fs.rng_seed << " n_samples=" << fs.n_samples << '\n';
  os << "# row: phase_rad followed by the samples of one frame\n";
  for (std::size_t f = 0; f < fs.n_frames(); ++f) {
    os << format_double(fs.phase_tags[f]);
    for (double v : fs.frame(f)) os << ',' << format_double(v);
    os << '\n';
  }
}

homodyne::FrameSet read_frames_csv(std::istream& is) {
  std::vector<std::string> comments;
  const auto rows = read_rows(is, &comments);
  if (comments.empty()) throw std::invalid_argument("frames csv: missing metadata line");
  std::map<std::string, std::string> meta;
  std::istringstream ms(comments.front());
  std::string tok;
  while (ms >> tok) {
    const auto eq = tok.find('=');
    if (eq != std::string::npos) meta[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  for (const char* key : {"dt", "t0", "kind", "seed", "n_samples"}) {
    if (!meta.count(key)) throw std::invalid_argument(std::string("frames csv: missing ") + key);
  }
  homodyne::FrameSet fs;
  fs.dt = parse_double(meta["dt"]);
  fs.t0 = parse_double(meta["t0"]);
  fs.kind = kind_from(meta["kind"]);
  fs.rng_seed = std::stoull(meta["seed"]);
  fs.n_samples = std::stoull(meta["n_samples"]);
  for (const auto& row : rows) {
    if (row.size() != fs.n_samples + 1) throw std::invalid_argument("frames csv: row length mismatch");
    fs.phase_tags.push_back(row[0]);
    fs.data.insert(fs.data.end(), row.begin() + 1, row.end());
  }
  homodyne::validate(fs);
  return fs;
}

void write_spectrum_csv(std::ostream& os, const dsp::SpectrumEstimate& spec, const Comments& comments) {
  write_comments(os, comments);
  os << "freq_hz,level_db,stderr_db\n";
  for (std::size_t k = 0; k < spec.freqs.size(); ++k) {
    os << format_double(spec.freqs[k]) << ',' << format_double(spec.level_db[k]) << ','
       << format_double(spec.stderr_db[k]) << '\n';
  }
}

void write_variance_csv(std::ostream& os, const dsp::VarianceTrace& trace, const Comments& comments) {
  write_comments(os, comments);
  os << "time_s,variance,stderr\n";
  for (std::size_t i = 0; i < trace.variance.size(); ++i) {
    os << format_double(trace.time_at(i)) << ',' << format_double(trace.variance[i]) << ','
       << format_double(trace.std_error[i]) << '\n';
  }
}

void write_power_csv(std::ostream& os, const pump::PowerTrace& trace, const Comments& comments) {
  write_comments(os, comments);
  os << "time_s,power_mw,phase_rad\n";
  for (std::size_t i = 0; i < trace.power_mw.size(); ++i) {
    os << format_double(trace.time_at(i)) << ',' << format_double(trace.power_mw[i]) << ','
       << format_double(trace.phase_rad[i]) << '\n';
  }
}

json to_json(const core::GaussianState& s) {
  return {{"mean", {s.mean(0), s.mean(1)}},
          {"cov", {s.cov(0, 0), s.cov(0, 1), s.cov(1, 0), s.cov(1, 1)}},
          {"det", s.cov.determinant()}};
}

json to_json(const estimation::Ellipse& e) {
  return {{"center", {e.center(0), e.center(1)}},
          {"semi_axes", {e.semi_major, e.semi_minor}},
          {"angle_deg", e.angle_deg}};
}

json to_json(const estimation::TomographyStdErrors& se) {
  return {{"mean_x", se.mean_x},   {"mean_p", se.mean_p},       {"delta_x", se.delta_x},
          {"delta_p", se.delta_p}, {"cov_xx", se.cov_xx},       {"cov_pp", se.cov_pp},
          {"cov_xp", se.cov_xp},   {"semi_major", se.semi_major}, {"semi_minor", se.semi_minor},
          {"angle_deg", se.angle_deg}};
}

json to_json(const estimation::TomographyResult& r) {
  json j = to_json(r.state);
  j["ellipse"] = to_json(r.ellipse);
  j["stderr"] = to_json(r.std_error);
  j["n_samples"] = r.n_samples;
  j["phases"] = r.phases;
  j["physical"] = r.physical;
  j["positive_definite"] = r.positive_definite;
  j["constrained"] = r.constrained;
  j["unconstrained"] = to_json(r.unconstrained);
  j["unconstrained"]["stderr"] = to_json(r.unconstrained_std_error);
  j["warnings"] = r.warnings;
  return j;
}

json to_json(const estimation::EprReport& r) {
  json scan = json::array();
  for (const auto& [tc, d] : r.scan) scan.push_back({tc, d});
  return {{"duan", r.duan},
          {"stderr", r.std_error},
          {"effective_db", r.effective_db},
          {"t_c", r.t_c},
          {"entangled", r.entangled},
          {"var_x_minus", r.var_x_minus},
          {"var_p_plus", r.var_p_plus},
          {"scan", scan},
          {"warnings", r.warnings}};
}

json to_json(const dsp::PureSqueezingEstimate& e) {
  return {{"pure_db", e.pure_db},
          {"pure_db_stderr", e.pure_db_se},
          {"loss", e.loss},
          {"loss_stderr", e.loss_se},
          {"r", e.r},
          {"low_confidence", e.low_confidence}};
}

void write_json(const std::filesystem::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace tmsqz::io

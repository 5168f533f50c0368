#include "mfctrl/policy_io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <vector>

#include "mfctrl/errors.hpp"

namespace mfctrl {

std::string FormatDouble(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

double ParseDouble(std::string_view token) {
  double value = 0.0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  if (!token.empty() && *first == '+') ++first;
  const auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc() || res.ptr != last) {
    // from_chars rejects inf/nan spellings produced by some writers.
    if (token == "inf") return std::numeric_limits<double>::infinity();
    if (token == "-inf") return -std::numeric_limits<double>::infinity();
    if (token == "nan") return std::numeric_limits<double>::quiet_NaN();
    throw ContractViolation("not a number: '" + std::string(token) + "'");
  }
  return value;
}

namespace {

void WriteRow(std::ostream& out, const Eigen::Ref<const Eigen::MatrixXd>& m) {
  // Row-major flattening.
  bool first = true;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (!first) out << ' ';
      out << FormatDouble(m(r, c));
      first = false;
    }
  }
  out << '\n';
}

void WriteHeader(std::ostream& out, const char* kind, const std::string& env,
                 const NominalTrajectory& traj) {
  if (traj.states.size() != traj.controls.size() + 1 || traj.controls.empty()) {
    throw ContractViolation("cannot write trajectory: needs N >= 1 and N+1 states");
  }
  out << "format " << kind << ' ' << kFileFormatVersion << '\n';
  out << "env " << env << '\n';
  out << "horizon " << traj.horizon() << '\n';
  out << "n_x " << traj.states.front().size() << '\n';
  out << "n_u " << traj.controls.front().size() << '\n';
  out << "cost " << FormatDouble(traj.cost) << '\n';
  out << "states\n";
  for (const auto& x : traj.states) WriteRow(out, x.transpose());
  out << "controls\n";
  for (const auto& u : traj.controls) WriteRow(out, u.transpose());
}

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  std::vector<std::string> Next() {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      std::istringstream ss(line);
      std::vector<std::string> tokens;
      for (std::string tok; ss >> tok;) tokens.push_back(tok);
      if (tokens.empty() || tokens.front().front() == '#') continue;
      return tokens;
    }
    Fail("unexpected end of file");
  }

  std::vector<std::string> Expect(const std::string& key, std::size_t args) {
    auto tokens = Next();
    if (tokens.front() != key || tokens.size() != args + 1) {
      Fail("expected '" + key + "' with " + std::to_string(args) + " value(s)");
    }
    return tokens;
  }

  long ExpectInt(const std::string& key) { return Integer(Expect(key, 1)[1], key); }

  long Integer(const std::string& tok, const std::string& key) {
    long v = 0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
      Fail("'" + key + "' needs an integer");
    }
    return v;
  }

  Matrix Row(Eigen::Index rows, Eigen::Index cols) {
    const auto tokens = Next();
    if (static_cast<Eigen::Index>(tokens.size()) != rows * cols) {
      Fail("expected " + std::to_string(rows * cols) + " numbers, got " +
           std::to_string(tokens.size()));
    }
    Matrix m(rows, cols);
    std::size_t i = 0;
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) {
        try {
          m(r, c) = ParseDouble(tokens[i++]);
        } catch (const ContractViolation& e) {
          Fail(e.what());
        }
      }
    }
    return m;
  }

  double Number(const std::string& token) {
    try {
      return ParseDouble(token);
    } catch (const ContractViolation& e) {
      Fail(e.what());
    }
  }

  [[noreturn]] void Fail(const std::string& msg) const {
    throw ContractViolation("line " + std::to_string(line_no_) + ": " + msg);
  }

 private:
  std::istream& in_;
  int line_no_ = 0;
};

struct Header {
  std::string env;
  NominalTrajectory traj;
};

Header ReadHeader(LineReader& reader, const std::string& kind) {
  const auto fmt = reader.Expect("format", 2);
  if (fmt[1] != kind) reader.Fail("expected format " + kind + ", got " + fmt[1]);
  if (fmt[2] != std::to_string(kFileFormatVersion)) {
    reader.Fail("unsupported format version " + fmt[2]);
  }
  Header h;
  h.env = reader.Expect("env", 1)[1];
  const long horizon = reader.ExpectInt("horizon");
  const long nx = reader.ExpectInt("n_x");
  const long nu = reader.ExpectInt("n_u");
  if (horizon < 1 || nx < 1 || nu < 1) reader.Fail("dimensions must be >= 1");
  h.traj.cost = reader.Number(reader.Expect("cost", 1)[1]);
  reader.Expect("states", 0);
  for (long t = 0; t <= horizon; ++t) {
    h.traj.states.push_back(reader.Row(nx, 1));
  }
  reader.Expect("controls", 0);
  for (long t = 0; t < horizon; ++t) {
    h.traj.controls.push_back(reader.Row(nu, 1));
  }
  return h;
}

}  // namespace

void WriteTrajectory(std::ostream& out, const std::string& env_name,
                     const NominalTrajectory& traj) {
  WriteHeader(out, "mfctrl-trajectory", env_name, traj);
  out << "end\n";
}

TrajectoryFile ReadTrajectory(std::istream& in) {
  LineReader reader(in);
  Header h = ReadHeader(reader, "mfctrl-trajectory");
  reader.Expect("end", 0);
  return {std::move(h.env), std::move(h.traj)};
}

void WritePolicy(std::ostream& out, const DecoupledPolicy& policy) {
  policy.Validate();
  WriteHeader(out, "mfctrl-policy", policy.env_name, policy.nominal);
  out << "gains\n";
  for (const auto& k : policy.gains) WriteRow(out, k);
  const auto& w = policy.lqr_weights;
  out << "weights " << w.state_weights().size() << ' '
      << w.control_weights().size() << '\n';
  for (const auto& q : w.state_weights()) WriteRow(out, q);
  for (const auto& r : w.control_weights()) WriteRow(out, r);
  WriteRow(out, w.terminal_weight());
  WriteRow(out, w.goal().transpose());
  out << "end\n";
}

DecoupledPolicy ReadPolicy(std::istream& in) {
  LineReader reader(in);
  Header h = ReadHeader(reader, "mfctrl-policy");
  const auto nx = h.traj.states.front().size();
  const auto nu = h.traj.controls.front().size();
  reader.Expect("gains", 0);
  std::vector<Matrix> gains;
  for (int t = 0; t < h.traj.horizon(); ++t) gains.push_back(reader.Row(nu, nx));
  const auto counts = reader.Expect("weights", 2);
  const long n_q = reader.Integer(counts[1], "weights");
  const long n_r = reader.Integer(counts[2], "weights");
  if (n_q < 1 || n_r < 1) reader.Fail("weights need at least one Q and one R");
  std::vector<Matrix> qs, rs;
  for (long i = 0; i < n_q; ++i) qs.push_back(reader.Row(nx, nx));
  for (long i = 0; i < n_r; ++i) rs.push_back(reader.Row(nu, nu));
  Matrix q_n = reader.Row(nx, nx);
  StateVector goal = reader.Row(1, nx).transpose();
  reader.Expect("end", 0);
  DecoupledPolicy policy{
      std::move(h.env), std::move(h.traj), std::move(gains),
      QuadraticCostModel(std::move(qs), std::move(rs), std::move(q_n),
                         std::move(goal))};
  policy.Validate();
  return policy;
}

void SaveTrajectory(const std::filesystem::path& path,
                    const std::string& env_name, const NominalTrajectory& traj) {
  std::ofstream out(path);
  if (!out) throw ContractViolation("cannot open " + path.string() + " for writing");
  WriteTrajectory(out, env_name, traj);
}

TrajectoryFile LoadTrajectory(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ContractViolation("cannot open trajectory file " + path.string());
  try {
    return ReadTrajectory(in);
  } catch (const ContractViolation& e) {
    throw ContractViolation(path.string() + ": " + e.what());
  }
}

void SavePolicy(const std::filesystem::path& path, const DecoupledPolicy& policy) {
  std::ofstream out(path);
  if (!out) throw ContractViolation("cannot open " + path.string() + " for writing");
  WritePolicy(out, policy);
}

DecoupledPolicy LoadPolicy(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ContractViolation("cannot open policy file " + path.string());
  try {
    return ReadPolicy(in);
  } catch (const ContractViolation& e) {
    throw ContractViolation(path.string() + ": " + e.what());
  }
}

}  // namespace mfctrl

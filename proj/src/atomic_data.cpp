#include "rayzero/atomic_data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "rayzero/constants.hpp"

namespace rayzero {

bool LevelKey::ok() const {
  if (n <= 0) return false;
  if (l != 0 && l != 1) return false;
  if (l == 0) return twice_j == 1;
  return twice_j == 1 || twice_j == 3;  // j in {|l-1/2|, l+1/2} for l = 1
}

std::string LevelKey::label() const {
  const char lsym = l == 0 ? 's' : 'p';
  return std::to_string(n) + lsym + "_" + std::to_string(twice_j) + "/2";
}

AtomicSystem::AtomicSystem(std::string species, LevelKey ground,
                           std::vector<ExcitedLevel> levels,
                           std::optional<TailEstimate> tail)
    : species_(std::move(species)), ground_(ground),
      levels_(std::move(levels)), tail_(tail) {
  validate_and_index();
}

void AtomicSystem::validate_and_index() {
  if (!(ground_.l == 0 && ground_.twice_j == 1) || !ground_.ok())
    throw ValidationError("ground level must be an s_1/2 state");

  for (const auto &lev : levels_) {
    if (!lev.key.ok() || lev.key.l != 1)
      throw ValidationError("excited level " + lev.key.label() +
                            " is not an electric-dipole-allowed p level");
    if (!(lev.omega > 0.0))
      throw ValidationError(lev.key.label() + ": omega must be positive");
    if (!(lev.m_sq > 0.0))
      throw ValidationError(lev.key.label() + ": m_sq must be positive");
    if (lev.m_sq_rel_unc < 0.0)
      throw ValidationError(lev.key.label() + ": rel_unc must be >= 0");
    if (lev.gamma && *lev.gamma < 0.0)
      throw ValidationError(lev.key.label() + ": gamma must be >= 0");
  }

  std::stable_sort(levels_.begin(), levels_.end(),
                   [](const ExcitedLevel &a, const ExcitedLevel &b) {
                     return a.omega < b.omega;
                   });

  std::set<LevelKey> seen;
  for (const auto &lev : levels_)
    if (!seen.insert(lev.key).second)
      throw ValidationError("duplicate level " + lev.key.label());

  poles_.clear();
  for (int i = 0; i < static_cast<int>(levels_.size()); ++i) {
    if (!poles_.empty() &&
        levels_[i].omega - poles_.back().omega < constants::pole_merge_eps_cm1) {
      poles_.back().level_index.push_back(i);
    } else {
      poles_.push_back(Pole{levels_[i].omega, {i}});
    }
  }
  for (std::size_t p = 1; p < poles_.size(); ++p)
    if (!(poles_[p].omega > poles_[p - 1].omega))
      throw ValidationError("pole list not strictly increasing after merge");
}

bool AtomicSystem::has_multiplet(int n) const {
  return !multiplet(n).empty();
}

std::vector<int> AtomicSystem::multiplet(int n) const {
  std::vector<int> idx;
  for (int i = 0; i < static_cast<int>(levels_.size()); ++i)
    if (levels_[i].key.n == n) idx.push_back(i);
  return idx;
}

std::vector<int> AtomicSystem::multiplet_ns() const {
  std::set<int> ns;
  for (const auto &lev : levels_) ns.insert(lev.key.n);
  return {ns.begin(), ns.end()};
}

double AtomicSystem::multiplet_omega(int n) const {
  double sw = 0.0, swo = 0.0;
  for (int i : multiplet(n)) {
    const auto &lev = levels_[i];
    const double w = lev.key.twice_j == 3 ? 2.0 : 1.0;
    sw += w * lev.m_sq;
    swo += w * lev.m_sq * lev.omega;
  }
  if (sw == 0.0) throw ValidationError("multiplet n=" + std::to_string(n) + " absent");
  return swo / sw;
}

double AtomicSystem::multiplet_strength(int n) const {
  const auto idx = multiplet(n);
  if (idx.empty()) throw ValidationError("multiplet n=" + std::to_string(n) + " absent");
  double s = 0.0;
  for (int i : idx)
    s += (levels_[i].key.twice_j == 3 ? 2.0 : 1.0) * levels_[i].m_sq;
  return s;
}

int AtomicSystem::pole_multiplet(int pole_index) const {
  return levels_[poles_.at(pole_index).level_index.front()].key.n;
}

AtomicSystem AtomicSystem::with_tail(std::optional<TailEstimate> tail) const {
  return AtomicSystem(species_, ground_, levels_, tail);
}

AtomicSystem AtomicSystem::restricted_to(const std::vector<int> &ns) const {
  std::vector<ExcitedLevel> keep;
  for (const auto &lev : levels_)
    if (std::find(ns.begin(), ns.end(), lev.key.n) != ns.end())
      keep.push_back(lev);
  return AtomicSystem(species_, ground_, std::move(keep), std::nullopt);
}

AtomicSystem AtomicSystem::with_m_sq(
    const std::vector<std::pair<LevelKey, double>> &assign) const {
  auto levels = levels_;
  for (const auto &[key, value] : assign) {
    bool found = false;
    for (auto &lev : levels)
      if (lev.key == key) {
        lev.m_sq = value;
        found = true;
      }
    if (!found)
      throw ValidationError("assignment to absent level " + key.label());
  }
  return AtomicSystem(species_, ground_, std::move(levels), tail_);
}

AtomicSystem AtomicSystem::with_scaled_multiplets(const std::vector<int> &ns,
                                                  double c) const {
  auto levels = levels_;
  for (auto &lev : levels)
    if (std::find(ns.begin(), ns.end(), lev.key.n) != ns.end())
      lev.m_sq *= c;
  return AtomicSystem(species_, ground_, std::move(levels), tail_);
}

double f_to_msq(double f, double omega_cm1, int twice_j) {
  if (!(f > 0.0)) throw ValidationError("f must be positive");
  if (!(omega_cm1 > 0.0)) throw ValidationError("omega must be positive");
  if (twice_j != 1 && twice_j != 3) throw ValidationError("j must be 1/2 or 3/2");
  const double omega_au = omega_cm1 * constants::cm1_to_hartree;
  return constants::f_convention_c * f /
         (omega_au * constants::angular_weight(twice_j));
}

double msq_to_f(double m_sq, double omega_cm1, int twice_j) {
  if (!(m_sq > 0.0)) throw ValidationError("m_sq must be positive");
  if (!(omega_cm1 > 0.0)) throw ValidationError("omega must be positive");
  if (twice_j != 1 && twice_j != 3) throw ValidationError("j must be 1/2 or 3/2");
  const double omega_au = omega_cm1 * constants::cm1_to_hartree;
  return m_sq * omega_au * constants::angular_weight(twice_j) /
         constants::f_convention_c;
}

double fs_splitting(const AtomicSystem &system, int n) {
  const auto idx = system.multiplet(n);
  if (idx.empty())
    throw ValidationError("multiplet n=" + std::to_string(n) + " absent");
  if (idx.size() == 1) return 0.0;
  double o12 = 0.0, o32 = 0.0;
  for (int i : idx) {
    const auto &lev = system.levels()[i];
    (lev.key.twice_j == 3 ? o32 : o12) = lev.omega;
  }
  return o32 - o12;
}

namespace {

std::string header_field(const std::string &header, const std::string &key,
                         const std::string &path, int line_no) {
  const auto pos = header.find(key + "=");
  if (pos == std::string::npos)
    throw ParseError(path, line_no, "missing header field '" + key + "='");
  auto end = header.find_first_of(" \t", pos);
  if (end == std::string::npos) end = header.size();
  return header.substr(pos + key.size() + 1, end - pos - key.size() - 1);
}

}  // namespace

AtomicSystem load_system(const std::string &path,
                         std::optional<ValueKind> kind) {
  std::ifstream in(path);
  if (!in) throw ValidationError("dataset not found: " + path);

  std::string line;
  int line_no = 0;
  bool have_header = false;
  std::string species;
  ValueKind file_kind = ValueKind::MSq;
  std::vector<ExcitedLevel> levels;

  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;

    if (!have_header) {
      species = header_field(line, "species", path, line_no);
      const auto unit = header_field(line, "energy_unit", path, line_no);
      if (unit != "cm-1")
        throw ParseError(path, line_no, "energy_unit must be cm-1, got '" + unit + "'");
      const auto value = header_field(line, "value", path, line_no);
      if (value == "f")
        file_kind = ValueKind::F;
      else if (value == "m_sq")
        file_kind = ValueKind::MSq;
      else
        throw ParseError(path, line_no, "value must be 'f' or 'm_sq', got '" + value + "'");
      have_header = true;
      continue;
    }

    std::istringstream row(line);
    int n = 0, l = -1, twice_j = 0;
    double energy = 0.0, value = 0.0, rel_unc = 0.0;
    if (!(row >> n >> l >> twice_j >> energy >> value >> rel_unc))
      throw ParseError(path, line_no, "expected 'n l 2j energy value rel_unc [gamma]'");
    ExcitedLevel lev;
    lev.key = LevelKey{n, l, twice_j};
    lev.omega = energy;
    lev.m_sq_rel_unc = rel_unc;
    double gamma = 0.0;
    if (row >> gamma) lev.gamma = gamma;
    std::string extra;
    if (row >> extra)
      throw ParseError(path, line_no, "trailing garbage '" + extra + "'");

    if (!lev.key.ok() || lev.key.l != 1)
      throw ParseError(path, line_no, "invalid level key for row " + lev.key.label());
    if (!(energy > 0.0)) throw ParseError(path, line_no, "energy must be positive");
    if (!(value > 0.0)) throw ParseError(path, line_no, "value must be positive");

    const ValueKind k = kind.value_or(file_kind);
    lev.m_sq = k == ValueKind::F ? f_to_msq(value, energy, twice_j) : value;
    levels.push_back(lev);
  }
  if (!have_header) throw ParseError(path, line_no, "missing header line");
  if (levels.empty()) throw ParseError(path, line_no, "no level rows");

  const int ground_n =
      std::min_element(levels.begin(), levels.end(),
                       [](const ExcitedLevel &a, const ExcitedLevel &b) {
                         return a.key.n < b.key.n;
                       })
          ->key.n;
  try {
    return AtomicSystem(species, LevelKey{ground_n, 0, 1}, std::move(levels));
  } catch (const ValidationError &e) {
    throw ValidationError(path + ": " + e.what());
  }
}

std::string file_fingerprint(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open for fingerprint: " + path);
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a 64
  char c;
  while (in.get(c)) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace rayzero

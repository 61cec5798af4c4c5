#include "fkg/app.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "fkg/error.hpp"
#include "fkg/scaling.hpp"

namespace fkg {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto p = s.find(sep, start);
        out.push_back(trim(s.substr(start, p == std::string_view::npos ? std::string_view::npos : p - start)));
        if (p == std::string_view::npos) break;
        start = p + 1;
    }
    return out;
}

std::vector<std::string> words(std::string_view s) {
    std::vector<std::string> out;
    std::istringstream in{std::string(s)};
    std::string w;
    while (in >> w) out.push_back(w);
    return out;
}

const std::map<std::string, std::set<std::string>>& known_keys() {
    static const std::map<std::string, std::set<std::string>> keys = {
        {"domain", {"x0", "y0", "x1", "y1", "a", "L"}},
        {"model", {"bc", "h", "H", "q"}},
        {"run", {"seed", "chains", "sweeps", "thermalization", "stride", "init", "threads", "checkpoint_every"}},
        {"observables", {"origin", "window", "max_r", "pairs", "annulus"}},
        {"sweep", {"a", "L", "h", "H"}},
        {"fit", {"r_min_factor", "t", "blocks"}},
    };
    return keys;
}

bool valid_phi_name(std::string_view name) {
    return !name.empty() && std::all_of(name.begin(), name.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
    });
}

bool valid_key(const std::string& key) {
    const auto dot = key.find('.');
    if (dot == std::string::npos) return false;
    const auto section = key.substr(0, dot), name = key.substr(dot + 1);
    const auto it = known_keys().find(section);
    if (it == known_keys().end()) return false;
    if (it->second.count(name)) return true;
    return section == "observables" && name.rfind("phi.", 0) == 0 && valid_phi_name(name.substr(4));
}

// Keys that change how a run is executed but not the samples it produces.
bool affects_samples(const std::string& key) {
    return key != "run.threads" && key != "run.checkpoint_every" && key.rfind("fit.", 0) != 0;
}

std::uint64_t to_u64(const std::string& key, const std::string& text) {
    std::uint64_t v = 0;
    const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    require(ec == std::errc() && p == text.data() + text.size(), Errc::config,
            key + ": expected a nonnegative integer, got '" + text + "'");
    return v;
}

std::int64_t to_i64(const std::string& key, const std::string& text) {
    std::int64_t v = 0;
    const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    require(ec == std::errc() && p == text.data() + text.size(), Errc::config,
            key + ": expected an integer, got '" + text + "'");
    return v;
}

double to_double(const std::string& key, const std::string& text) {
    double v = 0;
    const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    require(ec == std::errc() && p == text.data() + text.size() && std::isfinite(v), Errc::config,
            key + ": expected a number, got '" + text + "'");
    return v;
}

Rational to_rational(const std::string& key, const std::string& text) {
    try {
        return Rational::parse(text);
    } catch (const Error& e) {
        fail(Errc::config, key + ": " + e.what());
    }
}

Site to_site(const std::string& key, const std::string& text) {
    const auto p = split(text, ',');
    require(p.size() == 2, Errc::config, key + ": expected a site 'i,j', got '" + text + "'");
    return {to_i64(key, p[0]), to_i64(key, p[1])};
}

std::array<Rational, 4> to_corners(const std::string& key, const std::string& text) {
    const auto p = split(text, ',');
    require(p.size() == 4, Errc::config, key + ": expected 'x0,y0,x1,y1', got '" + text + "'");
    return {to_rational(key, p[0]), to_rational(key, p[1]), to_rational(key, p[2]), to_rational(key, p[3])};
}

TestFunction to_test_function(const std::string& key, const std::string& text) {
    const auto w = words(text);
    require(!w.empty(), Errc::config, key + ": empty test function");
    if (w[0] == "indicator" && w.size() == 2) {
        const auto c = to_corners(key, w[1]);
        return TestFunction::indicator(Rect{c[0], c[1], c[2], c[3]});
    }
    if (w[0] == "product_xy" && w.size() == 1) return TestFunction::product_xy();
    if (w[0] == "constant" && w.size() == 2) return TestFunction::constant_value(to_double(key, w[1]));
    fail(Errc::config, key + ": expected 'indicator x0,y0,x1,y1', 'product_xy' or 'constant c', got '" + text + "'");
}

void write_atomic(const fs::path& path, const std::string& content) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        require(out.good(), Errc::io, "cannot write '" + tmp.string() + "'");
        out << content;
        out.flush();
        require(out.good(), Errc::io, "write to '" + tmp.string() + "' failed");
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    require(!ec, Errc::io, "cannot replace '" + path.string() + "': " + ec.message());
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), Errc::io, "cannot read '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json read_json(const fs::path& path) {
    try {
        return json::parse(read_file(path));
    } catch (const json::exception& e) {
        fail(Errc::io, "'" + path.string() + "' is not valid JSON: " + e.what());
    }
}

void make_dirs(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    require(!ec && fs::is_directory(dir), Errc::io, "cannot create output directory '" + dir.string() + "'");
    const fs::path probe = dir / ".write_probe";
    {
        std::ofstream out(probe);
        require(out.good(), Errc::io, "output directory '" + dir.string() + "' is not writable");
    }
    fs::remove(probe, ec);
}

unsigned worker_count(unsigned requested, const Config& cfg, std::size_t jobs) {
    unsigned n = requested;
    if (n == 0) {
        if (const auto t = cfg.get("run.threads")) n = static_cast<unsigned>(to_u64("run.threads", *t));
    }
    if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
    return static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(jobs, 1)));
}

// ---- checkpoints ----------------------------------------------------------

std::string checkpoint_json(const ChainCheckpoint& cp, std::uint64_t hash, std::uint64_t seed, std::uint64_t chain) {
    std::string spins(cp.spin.size(), '+');
    for (std::size_t k = 0; k < cp.spin.size(); ++k)
        if (cp.spin[k] < 0) spins[k] = '-';
    json j{{"config_hash", hex64(hash)},
           {"seed", seed},
           {"chain", chain},
           {"sweeps", cp.sweeps},
           {"thermalization", cp.thermalization},
           {"wired_spin", static_cast<int>(cp.wired_spin)},
           {"spins", spins}};
    return j.dump() + "\n";
}

ChainCheckpoint read_checkpoint(const fs::path& path, std::uint64_t hash, std::uint64_t chain) {
    const json j = read_json(path);
    ChainCheckpoint cp;
    try {
        require(j.at("config_hash").get<std::string>() == hex64(hash), Errc::config,
                "checkpoint '" + path.string() + "' belongs to a different configuration");
        require(j.at("chain").get<std::uint64_t>() == chain, Errc::io,
                "checkpoint '" + path.string() + "' belongs to another chain");
        cp.sweeps = j.at("sweeps").get<std::uint64_t>();
        cp.thermalization = j.at("thermalization").get<std::uint64_t>();
        cp.wired_spin = static_cast<std::int8_t>(j.at("wired_spin").get<int>());
        for (char c : j.at("spins").get<std::string>()) {
            require(c == '+' || c == '-', Errc::io, "corrupt spins in '" + path.string() + "'");
            cp.spin.push_back(c == '+' ? 1 : -1);
        }
    } catch (const json::exception& e) {
        fail(Errc::io, "corrupt checkpoint '" + path.string() + "': " + e.what());
    }
    return cp;
}

// Keeps the header and the rows measured at or before `sweeps`.
void truncate_csv(const fs::path& path, std::uint64_t sweeps) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), Errc::io, "cannot read '" + path.string() + "' for resuming");
    std::string line, kept;
    bool header = true;
    while (std::getline(in, line)) {
        if (header) {
            kept += line + '\n';
            header = false;
            continue;
        }
        if (line.empty()) continue;
        const auto comma = line.find(',');
        const std::string first = line.substr(0, comma);
        double s = 0;
        const auto [p, ec] = std::from_chars(first.data(), first.data() + first.size(), s);
        if (ec != std::errc() || p != first.data() + first.size()) break;  // torn last line
        if (s > static_cast<double>(sweeps)) break;
        kept += line + '\n';
    }
    in.close();
    write_atomic(path, kept);
}

struct ChainOutcome {
    std::uint64_t thermalization = 0;
    std::uint64_t sweeps_done = 0;
    bool done = false;
};

ChainOutcome run_one_chain(const std::shared_ptr<const GhostGraph>& graph, const RunSpec& spec, std::uint64_t c,
                           const fs::path& dir, std::uint64_t hash, bool resume, std::optional<std::uint64_t> stop_after,
                           std::uint64_t checkpoint_every) {
    ChainRunner runner(graph, spec, c);
    const fs::path csv = dir / ("chain_" + std::to_string(c) + ".csv");
    const fs::path ckpt = dir / ("checkpoint_" + std::to_string(c) + ".json");

    std::ofstream out;
    if (resume && fs::exists(ckpt)) {
        runner.restore(read_checkpoint(ckpt, hash, c));
        truncate_csv(csv, runner.sweeps_done());
        out.open(csv, std::ios::binary | std::ios::app);
    } else {
        out.open(csv, std::ios::binary | std::ios::trunc);
        out << csv_header(runner.header()) << '\n';
    }
    require(out.good(), Errc::io, "cannot write '" + csv.string() + "'");

    const std::uint64_t target = stop_after ? std::min(*stop_after, spec.sweeps) : spec.sweeps;
    const std::uint64_t step = checkpoint_every > 0 ? checkpoint_every : std::max<std::uint64_t>(target, 1);
    const auto sink = [&](const std::vector<double>& row) { out << csv_line(row) << '\n'; };
    auto save = [&] {
        out.flush();
        require(out.good(), Errc::io, "write to '" + csv.string() + "' failed");
        write_atomic(ckpt, checkpoint_json(runner.checkpoint(), hash, spec.seed, c));
    };
    bool saved = false;
    while (runner.sweeps_done() < target) {
        const std::uint64_t next = std::min(target, (runner.sweeps_done() / step + 1) * step);
        runner.advance(next, sink);
        save();
        saved = true;
    }
    if (!saved) save();
    return {runner.thermalization(), runner.sweeps_done(), runner.done()};
}

std::string label_of(const std::map<std::string, std::string>& params) {
    std::string s;
    for (const auto& [k, v] : params) s += (s.empty() ? "" : ";") + k + "=" + v;
    return s;
}

// ---- fits -------------------------------------------------------------------

json fit_json(const FitResult& f, const ScalingSeries& s, double target) {
    json pts = json::array();  // only the points the fit used, so tables refit to the same result
    for (const auto& p : s.points)
        if (p.x >= f.window_lo && p.x <= f.window_hi) pts.push_back({{"x", p.x}, {"y", p.y}, {"stderr", p.error}});
    return {{"observable", f.observable},
            {"control", s.control},
            {"exponent", f.exponent},
            {"exponent_stderr", f.exponent_stderr},
            {"amplitude", f.amplitude},
            {"amplitude_stderr", f.amplitude_stderr},
            {"window", {f.window_lo, f.window_hi}},
            {"n_points", f.n_points},
            {"chi2", f.chi2},
            {"warnings", f.warnings},
            {"target_exponent", target},
            {"series", pts}};
}

std::string fit_line(const FitResult& f, double target) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%s exponent: %.6f +- %.6f (paper: %s), amplitude %.6g, %zu points, chi2 %.3g",
                  f.observable.c_str(), f.exponent, f.exponent_stderr, target_text(target).c_str(), f.amplitude,
                  f.n_points, f.chi2);
    std::string s = buf;
    for (const auto& w : f.warnings) s += "\n  warning: " + w;
    return s;
}

void sort_by_x(ScalingSeries& s) {
    std::sort(s.points.begin(), s.points.end(), [](const auto& p, const auto& q) { return p.x < q.x; });
}

std::string hkey(double h) {
    std::string s = format_double(h);
    for (char& c : s)
        if (c == '.') c = 'p';
    return s;
}

std::size_t blocks_of(const Config& base) {
    const auto b = base.get("fit.blocks");
    const std::size_t n = b ? to_u64("fit.blocks", *b) : 50;
    require(n >= 2, Errc::config, "fit.blocks must be at least 2");
    return n;
}

fs::path index_file(const std::string& index_path) {
    fs::path p(index_path);
    if (fs::is_directory(p)) p /= "index.json";
    require(fs::exists(p), Errc::io, "index '" + p.string() + "' not found");
    return p;
}

} // namespace

// ---- Config -------------------------------------------------------------------

Config Config::parse(std::string_view text, const std::string& source) {
    Config c;
    std::istringstream in{std::string(text)};
    std::string line, section;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string where = source + ":" + std::to_string(lineno) + ": ";
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty() || line[0] == ';') continue;
        if (line.front() == '[') {
            require(line.back() == ']', Errc::config, where + "unterminated section header");
            section = trim(std::string_view(line).substr(1, line.size() - 2));
            require(known_keys().count(section) != 0, Errc::config, where + "unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        require(eq != std::string::npos, Errc::config, where + "expected 'key = value'");
        require(!section.empty(), Errc::config, where + "key outside of a section");
        const std::string key = section + "." + trim(std::string_view(line).substr(0, eq));
        const std::string value = trim(std::string_view(line).substr(eq + 1));
        require(valid_key(key), Errc::config, where + "unknown key '" + key + "'");
        require(!value.empty(), Errc::config, where + "empty value for '" + key + "'");
        require(c.values_.emplace(key, value).second, Errc::config, where + "duplicate key '" + key + "'");
    }
    return c;
}

Config Config::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), Errc::config, "cannot read config '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path);
}

void Config::set(const std::string& key, const std::string& value) {
    require(valid_key(key), Errc::config, "unknown key '" + key + "'");
    const std::string v = trim(value);
    require(!v.empty(), Errc::config, "empty value for '" + key + "'");
    values_[key] = v;
}

std::optional<std::string> Config::get(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
}

std::string Config::canonical() const {
    std::string s;
    for (const auto& [k, v] : values_)
        if (affects_samples(k)) s += k + " = " + v + "\n";
    return s;
}

std::uint64_t Config::hash() const { return fnv1a(canonical()); }

std::string Config::to_ini() const {
    std::string s, section;
    for (const auto& [k, v] : values_) {
        const auto dot = k.find('.');
        const std::string sec = k.substr(0, dot);
        if (sec != section) {
            s += (s.empty() ? "[" : "\n[") + sec + "]\n";
            section = sec;
        }
        s += k.substr(dot + 1) + " = " + v + "\n";
    }
    return s;
}

std::uint64_t fnv1a(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string hex64(std::uint64_t x) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
    return buf;
}

double resolved_h(const Config& cfg) {
    const auto h = cfg.get("model.h"), H = cfg.get("model.H");
    require(!(h && H), Errc::config, "give either model.h or model.H, not both");
    if (H) {
        const Rational a = to_rational("domain.a", cfg.get("domain.a").value_or("1"));
        return to_double("model.H", *H) / std::pow(a.value(), 15.0 / 8.0);
    }
    return h ? to_double("model.h", *h) : 0.0;
}

RunSpec to_run_spec(const Config& cfg) {
    RunSpec s;
    s.a = to_rational("domain.a", cfg.get("domain.a").value_or("1"));
    require(s.a > Rational(0), Errc::config, "domain.a must be positive");
    const bool corners = cfg.has("domain.x0") || cfg.has("domain.y0") || cfg.has("domain.x1") || cfg.has("domain.y1");
    if (const auto L = cfg.get("domain.L")) {
        require(!corners, Errc::config, "give either domain.L or the corners x0,y0,x1,y1, not both");
        const auto n = to_i64("domain.L", *L);
        require(n > 0, Errc::config, "domain.L must be positive");
        const Rational half = Rational(n) * s.a / Rational(2);
        s.region = {Rect{-half, -half, half, half}};
    } else {
        for (const char* k : {"domain.x0", "domain.y0", "domain.x1", "domain.y1"})
            require(cfg.has(k), Errc::config, std::string("missing ") + k + " (or domain.L)");
        const Rect r{to_rational("domain.x0", *cfg.get("domain.x0")), to_rational("domain.y0", *cfg.get("domain.y0")),
                     to_rational("domain.x1", *cfg.get("domain.x1")), to_rational("domain.y1", *cfg.get("domain.y1"))};
        require(r.x0 < r.x1 && r.y0 < r.y1, Errc::config, "domain corners must satisfy x0 < x1 and y0 < y1");
        s.region = {r};
    }

    s.bc = BoundaryCondition{parse_boundary_kind(cfg.get("model.bc").value_or("free")), {}};
    if (const auto q = cfg.get("model.q"))
        require(to_double("model.q", *q) == 2.0, Errc::config,
                "simulation supports q = 2 only; other cluster weights are covered by verify");
    s.h = resolved_h(cfg);

    s.seed = to_u64("run.seed", cfg.get("run.seed").value_or("1"));
    s.chains = static_cast<std::uint32_t>(to_u64("run.chains", cfg.get("run.chains").value_or("1")));
    const auto sweeps = cfg.get("run.sweeps");
    require(sweeps.has_value(), Errc::config, "missing run.sweeps");
    s.sweeps = to_u64("run.sweeps", *sweeps);
    if (const auto t = cfg.get("run.thermalization"); t && *t != "auto") s.thermalization = to_u64("run.thermalization", *t);
    s.stride = to_u64("run.stride", cfg.get("run.stride").value_or("1"));
    const std::string init = cfg.get("run.init").value_or("plus");
    if (init == "plus") s.init = InitialState::AllPlus;
    else if (init == "minus") s.init = InitialState::AllMinus;
    else if (init == "random") s.init = InitialState::Random;
    else fail(Errc::config, "run.init must be plus, minus or random");
    if (const auto c = cfg.get("run.checkpoint_every")) to_u64("run.checkpoint_every", *c);

    auto& o = s.observables;
    if (const auto v = cfg.get("observables.origin")) o.origin = to_site("observables.origin", *v);
    if (const auto v = cfg.get("observables.window")) o.window = to_i64("observables.window", *v);
    if (const auto v = cfg.get("observables.max_r")) o.max_r = to_i64("observables.max_r", *v);
    require(o.window >= 0 && o.max_r >= 0, Errc::config, "window and max_r must be nonnegative");
    if (const auto v = cfg.get("observables.pairs")) {
        for (const auto& p : words(*v)) {
            const auto ends = split(p, ':');
            require(ends.size() == 2, Errc::config, "observables.pairs: expected 'i,j:k,l', got '" + p + "'");
            o.pairs.push_back({to_site("observables.pairs", ends[0]), to_site("observables.pairs", ends[1])});
        }
    }
    if (const auto v = cfg.get("observables.annulus")) {
        const auto parts = split(*v, ':');
        require(parts.size() == 2, Errc::config, "observables.annulus: expected 'inner corners : outer corners'");
        const auto in = to_corners("observables.annulus", parts[0]), out = to_corners("observables.annulus", parts[1]);
        o.annulus = {ClosedRect{in[0], in[1], in[2], in[3]}, ClosedRect{out[0], out[1], out[2], out[3]}};
    }
    for (const auto& [k, v] : cfg.values())
        if (k.rfind("observables.phi.", 0) == 0) o.phi.push_back({k.substr(16), to_test_function(k, v)});

    s.validate();
    return s;
}

// ---- simulate ------------------------------------------------------------------

bool simulate(const Config& cfg, const SimulateOptions& opts) {
    require(!opts.out.empty(), Errc::config, "no output directory given");
    const RunSpec spec = to_run_spec(cfg);
    const std::uint64_t every =
        cfg.get("run.checkpoint_every") ? to_u64("run.checkpoint_every", *cfg.get("run.checkpoint_every")) : 0;
    const fs::path dir(opts.out);
    make_dirs(dir);
    const std::uint64_t hash = cfg.hash();
    const fs::path manifest_path = dir / "manifest.json";

    double previous_wall = 0.0;
    const bool resuming = opts.resume && fs::exists(manifest_path);
    if (resuming) {
        const json m = read_json(manifest_path);
        const std::string recorded = m.value("config_hash", "");
        require(recorded == hex64(hash), Errc::config,
                "resume refused: configuration hash " + hex64(hash) + " differs from the manifest's " + recorded);
        previous_wall = m.value("wall_time_s", 0.0);
    }

    const auto start = std::chrono::steady_clock::now();
    json manifest{{"config_hash", hex64(hash)},
                  {"seed", spec.seed},
                  {"chains", spec.chains},
                  {"version", FKG_VERSION},
                  {"config", cfg.to_ini()},
                  {"complete", false},
                  {"wall_time_s", previous_wall}};
    write_atomic(manifest_path, manifest.dump(2) + "\n");

    const auto graph = spec.build_graph();
    std::vector<ChainOutcome> outcomes(spec.chains);
    std::atomic<std::uint64_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const std::uint64_t c = next.fetch_add(1);
            if (c >= spec.chains) return;
            try {
                outcomes[c] = run_one_chain(graph, spec, c, dir, hash, resuming, opts.stop_after, every);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                next = spec.chains;
            }
        }
    };
    const unsigned n = worker_count(opts.threads, cfg, spec.chains);
    if (n <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned k = 0; k < n; ++k) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (error) std::rethrow_exception(error);

    bool complete = true;
    json therm = json::array(), done = json::array();
    for (const auto& o : outcomes) {
        complete = complete && o.done;
        therm.push_back(o.thermalization);
        done.push_back(o.sweeps_done);
    }
    manifest["complete"] = complete;
    manifest["thermalization"] = therm;
    manifest["sweeps_done"] = done;
    manifest["wall_time_s"] =
        previous_wall + std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_atomic(manifest_path, manifest.dump(2) + "\n");
    return complete;
}

// ---- sweep ------------------------------------------------------------------------

std::string GridPoint::label() const { return label_of(params); }

std::vector<GridPoint> expand_grid(const Config& cfg) {
    std::map<std::string, std::vector<std::string>> axes;
    for (const auto& [k, v] : cfg.values()) {
        if (k.rfind("sweep.", 0) != 0) continue;
        auto vals = split(v, ',');
        for (const auto& x : vals) require(!x.empty(), Errc::config, k + ": empty grid value");
        axes[k.substr(6)] = std::move(vals);
    }
    require(!axes.empty(), Errc::config, "empty grid: the [sweep] section declares no axis");
    require(!(axes.count("h") && axes.count("H")), Errc::config, "sweep over h or H, not both");

    Config base = cfg;
    for (const auto& [name, vals] : axes) base.erase("sweep." + name);
    const std::uint64_t seed = to_u64("run.seed", cfg.get("run.seed").value_or("1"));

    std::vector<GridPoint> points(1);
    for (const auto& [name, vals] : axes) {
        std::vector<GridPoint> grown;
        for (const auto& p : points)
            for (const auto& v : vals) {
                GridPoint q = p;
                q.params[name] = v;
                grown.push_back(std::move(q));
            }
        points = std::move(grown);
    }
    std::map<std::uint64_t, std::string> seen;
    for (auto& p : points) {
        p.config = base;
        for (const auto& [name, v] : p.params) {
            if (name == "a") p.config.set("domain.a", v);
            if (name == "L") p.config.set("domain.L", v);
            if (name == "h") p.config.erase("model.H"), p.config.set("model.h", v);
            if (name == "H") p.config.erase("model.h"), p.config.set("model.H", v);
        }
        p.seed = seed ^ fnv1a(p.label());
        const auto [it, fresh] = seen.emplace(p.seed, p.label());
        require(fresh, Errc::config, "derived seeds collide for grid points " + it->second + " and " + p.label());
        p.config.set("run.seed", std::to_string(p.seed));
        to_run_spec(p.config);  // every point is validated before anything runs
    }
    return points;
}

bool sweep(const Config& cfg, const SimulateOptions& opts) {
    require(!opts.out.empty(), Errc::config, "no output directory given");
    const auto points = expand_grid(cfg);
    const fs::path dir(opts.out);
    make_dirs(dir);
    const fs::path index_path = dir / "index.json";
    if (opts.resume && fs::exists(index_path)) {
        const json old = read_json(index_path);
        require(old.value("config_hash", "") == hex64(cfg.hash()), Errc::config,
                "resume refused: the sweep configuration changed since " + index_path.string() + " was written");
    }

    json index{{"version", FKG_VERSION}, {"config_hash", hex64(cfg.hash())}, {"config", cfg.to_ini()}};
    json list = json::array();
    char name[32];
    for (std::size_t k = 0; k < points.size(); ++k) {
        std::snprintf(name, sizeof name, "point_%03zu", k);
        list.push_back({{"dir", name}, {"label", points[k].label()}, {"params", points[k].params}, {"seed", points[k].seed}});
    }
    index["points"] = list;
    write_atomic(index_path, index.dump(2) + "\n");

    bool complete = true;
    for (std::size_t k = 0; k < points.size(); ++k) {
        SimulateOptions o = opts;
        o.out = (dir / list[k]["dir"].get<std::string>()).string();
        complete = simulate(points[k].config, o) && complete;
    }
    return complete;
}

// ---- fit ---------------------------------------------------------------------------

std::vector<LoadedRun> load_index(const std::string& index_path, Config* base) {
    const fs::path file = index_file(index_path);
    const json index = read_json(file);
    const fs::path root = file.parent_path();
    if (base) *base = Config::parse(index.value("config", ""), file.string());

    std::vector<LoadedRun> runs;
    std::vector<std::string> missing;
    for (const auto& p : index.at("points")) {
        const fs::path dir = root / p.at("dir").get<std::string>();
        const fs::path mpath = dir / "manifest.json";
        if (!fs::exists(mpath)) {
            missing.push_back(dir.string());
            continue;
        }
        const json m = read_json(mpath);
        if (!m.value("complete", false)) {
            missing.push_back(dir.string() + " (incomplete)");
            continue;
        }
        LoadedRun r;
        r.dir = dir.string();
        r.config = Config::parse(m.at("config").get<std::string>(), mpath.string());
        const RunSpec spec = to_run_spec(r.config);
        for (std::uint32_t c = 0; c < spec.chains; ++c) {
            const fs::path csv = dir / ("chain_" + std::to_string(c) + ".csv");
            std::ifstream in(csv, std::ios::binary);
            if (!in.good()) {
                missing.push_back(csv.string());
                continue;
            }
            const RecordTable t = read_csv(in);
            if (c == 0) r.records = t;
            else r.records.append(t);
        }
        r.a = spec.a.value();
        r.h = spec.h;
        r.H = spec.h * std::pow(r.a, 15.0 / 8.0);
        const auto dom = LatticeDomain::build(spec.region, spec.a);
        r.vertices = dom.vertex_count();
        const Rect& b = spec.region.front();
        r.side = std::min(((b.x1 - b.x0) / spec.a).value(), ((b.y1 - b.y0) / spec.a).value());
        runs.push_back(std::move(r));
    }
    if (!missing.empty()) {
        std::string s = "missing runs:";
        for (const auto& m : missing) s += "\n  " + m;
        fail(Errc::io, s);
    }
    return runs;
}

std::string target_text(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", x);
    std::string s = buf;
    while (!s.empty() && s.back() == '0') s.pop_back();
    if (!s.empty() && s.back() == '.') s.pop_back();
    return s;
}

FitOutput fit_index(const std::string& index_path, const std::string& target) {
    static const std::set<std::string> targets{"magnetization", "mass", "one_arm", "identity", "mgf"};
    require(targets.count(target) != 0, Errc::config,
            "unknown fit target '" + target + "' (magnetization, mass, one_arm, identity, mgf)");
    Config base;
    const auto runs = load_index(index_path, &base);
    const std::size_t blocks = blocks_of(base);

    FitOutput out;
    json doc{{"target", target}, {"runs", runs.size()}};
    json fits = json::array();
    std::ostringstream summary;

    if (target == "magnetization") {
        ScalingSeries s{"magnetization", "H", {}};
        double side = 0;
        std::vector<std::string> skipped;
        for (const auto& r : runs) {
            if (!(r.H > 0)) {
                skipped.push_back(r.dir);
                continue;
            }
            const auto e = column_estimate(r.records, r.records.has("sbar") ? "sbar" : "s_center", blocks);
            s.points.push_back({r.H, e.value, e.error});
            side = side == 0 ? r.side : std::min(side, r.side);
        }
        sort_by_x(s);
        const auto m = magnetization_fit(s, side);
        fits.push_back(fit_json(m.fit, s, kMagnetizationExponent));
        doc["plateau_ratio"] = m.plateau_ratio;
        summary << fit_line(m.fit, kMagnetizationExponent) << "\n";
        summary << "plateau ratio max/min <sigma>/H^(1/15): " << target_text(m.plateau_ratio) << "\n";
        for (const auto& d : skipped) summary << "skipped zero-field run " << d << "\n";
    } else if (target == "mass") {
        const double c = base.get("fit.r_min_factor") ? to_double("fit.r_min_factor", *base.get("fit.r_min_factor")) : 0.5;
        ScalingSeries masses{"mass", "H", {}}, prefactors{"mass_prefactor", "H", {}};
        json per = json::array();
        for (const auto& r : runs) {
            json item{{"dir", r.dir}, {"H", r.H}};
            if (!(r.H > 0)) {
                item["refused"] = "zero field: critical decay has no mass";
                summary << "H=0 refused: critical decay has no mass\n";
                per.push_back(item);
                continue;
            }
            const double r_min = std::max(1.0, std::ceil(c * std::pow(r.H, -8.0 / 15.0)));
            const auto f = r.records.has("wc_0") ? wall_correlator(r.records, blocks) : point_correlator(r.records, blocks);
            const auto m = effective_mass(f, r_min);
            item["r_min"] = r_min;
            if (!m.valid) {
                item["refused"] = m.reason;
                summary << "H=" << format_double(r.H) << " refused: " << m.reason << "\n";
                per.push_back(item);
                continue;
            }
            masses.points.push_back({r.H, m.mass, m.error});
            item["mass"] = m.mass;
            item["mass_stderr"] = m.error;
            item["window"] = {m.r_lo, m.r_hi};
            if (r.records.has("pc_1")) {
                const auto pf = point_correlator(r.records, blocks);
                const auto pm = effective_mass(pf, r_min);
                if (pm.valid) {
                    const auto pre = correlator_prefactor(pf, pm);
                    if (pre.value > 0 && pre.error > 0) prefactors.points.push_back({r.H, pre.value, pre.error});
                    item["prefactor"] = pre.value;
                }
            }
            per.push_back(item);
        }
        doc["points"] = per;
        sort_by_x(masses);
        const auto mf = mass_fit(masses);
        fits.push_back(fit_json(mf.fit, masses, kMassExponent));
        doc["bound_constant"] = mf.bound_constant;
        doc["bound_spread"] = mf.bound_spread;
        summary << fit_line(mf.fit, kMassExponent) << "\n";
        summary << "m(H) <= C H^(8/15) with C = " << target_text(mf.bound_constant)
                << " (max/min of m/H^(8/15): " << target_text(mf.bound_spread) << ")\n";
        if (prefactors.points.size() >= 3) {
            sort_by_x(prefactors);
            const auto pf = fit_power_law(prefactors);
            fits.push_back(fit_json(pf, prefactors, kPrefactorExponent));
            summary << fit_line(pf, kPrefactorExponent) << "\n";
        } else {
            summary << "prefactor check skipped: fewer than 3 usable point correlators\n";
        }
    } else if (target == "one_arm") {
        std::map<double, std::vector<const LoadedRun*>> by_h;
        for (const auto& r : runs) by_h[r.h].push_back(&r);
        for (const auto& [h, group] : by_h) {
            ScalingSeries s{"one_arm_h" + hkey(h), "a", {}};
            std::vector<std::pair<double, double>> succ;
            for (const auto* r : group) {
                const auto col = r->records.column("one_arm");
                double hits = 0;
                for (double v : col) hits += v;
                auto e = column_estimate(r->records, "one_arm", blocks);
                const double n = static_cast<double>(col.size());
                e.error = std::max(e.error, 1.0 / std::max(n, 1.0));  // all-success runs at coarse a
                s.points.push_back({r->a, e.value, e.error});
                succ.push_back({r->a, hits});
            }
            sort_by_x(s);
            std::sort(succ.begin(), succ.end());
            std::vector<double> hits;
            for (const auto& p : succ) hits.push_back(p.second);
            const auto f = one_arm_fit(s, hits);
            fits.push_back(fit_json(f, s, kOneArmExponent));
            summary << "h=" << format_double(h) << " " << fit_line(f, kOneArmExponent) << "\n";
        }
    } else if (target == "identity") {
        json reports = json::array();
        double worst = 0;
        for (const auto& r : runs) {
            const auto rep = identity_check(r.records.column("m"), r.records.column("mbar"), r.a,
                                            static_cast<double>(r.vertices), blocks);
            out.passed = out.passed && rep.holds(1e-12);
            worst = std::max(worst, rep.abs_diff());
            reports.push_back({{"dir", r.dir},
                               {"a", rep.a},
                               {"H", rep.H},
                               {"lhs", rep.lhs},
                               {"rhs", rep.rhs},
                               {"abs_diff", rep.abs_diff()},
                               {"holds", rep.holds(1e-12)},
                               {"rescaled_lhs", {rep.rescaled_lhs.value, rep.rescaled_lhs.error}},
                               {"rescaled_rhs", {rep.rescaled_rhs.value, rep.rescaled_rhs.error}}});
            summary << "a=" << format_double(rep.a) << " H^(1/15)-rescaled magnetization "
                    << target_text(rep.rescaled_lhs.value) << " +- " << target_text(rep.rescaled_lhs.error) << "\n";
        }
        doc["identity"] = reports;
        doc["holds"] = out.passed;
        summary << "identity " << (out.passed ? "holds" : "FAILS") << " on " << runs.size()
                << " runs, max |lhs - rhs| = " << worst << "\n";
    } else {  // mgf
        std::vector<double> t;
        for (const auto& x : split(base.get("fit.t").value_or("0.5,1,2"), ',')) t.push_back(to_double("fit.t", x));
        std::map<double, std::vector<const LoadedRun*>> by_h;
        for (const auto& r : runs) by_h[r.h].push_back(&r);
        json groups = json::array();
        for (const auto& [h, group] : by_h) {
            auto sorted = group;
            std::sort(sorted.begin(), sorted.end(), [](auto* x, auto* y) { return x->a > y->a; });
            json per = json::array();
            double ref = 0, worst = 0;
            for (const auto* r : sorted) {
                const auto f = mgf_fit(r->records.column("A_max"), t, h, blocks);
                if (r == sorted.front()) ref = f.constant;
                else worst = std::max(worst, relative_change(ref, f.constant));
                json est = json::array();
                for (std::size_t k = 0; k < t.size(); ++k)
                    est.push_back({{"t", t[k]}, {"mgf", f.estimates[k].value}, {"stderr", f.estimates[k].error}});
                per.push_back({{"a", r->a}, {"C", f.constant}, {"estimates", est}});
                summary << "mgf h=" << format_double(h) << " a=" << format_double(r->a)
                        << ": C = " << target_text(f.constant) << "\n";
            }
            groups.push_back({{"h", h}, {"spacings", per}, {"relative_variation", worst}});
            summary << "mgf h=" << format_double(h) << ": relative variation of C " << target_text(worst) << "\n";
        }
        doc["groups"] = groups;
    }

    doc["fits"] = fits;
    out.json = doc.dump(2) + "\n";
    out.summary = summary.str();
    const fs::path fits_dir = index_file(index_path).parent_path() / "fits";
    make_dirs(fits_dir);
    write_atomic(fits_dir / (target + ".json"), out.json);
    return out;
}

// ---- report ------------------------------------------------------------------------

std::vector<std::string> write_report(const std::string& index_path, const std::string& out_dir) {
    const fs::path file = index_file(index_path);
    const fs::path fits_dir = file.parent_path() / "fits";
    const fs::path out = out_dir.empty() ? file.parent_path() / "report" : fs::path(out_dir);
    make_dirs(out);

    std::vector<std::string> warnings;
    std::vector<fs::path> inputs;
    if (fs::is_directory(fits_dir))
        for (const auto& e : fs::directory_iterator(fits_dir))
            if (e.path().extension() == ".json") inputs.push_back(e.path());
    std::sort(inputs.begin(), inputs.end());

    std::string summary;
    std::size_t tables = 0;
    for (const auto& p : inputs) {
        const json doc = read_json(p);
        for (const auto& f : doc.value("fits", json::array())) {
            const std::string name = f.at("observable").get<std::string>();
            const double k = f.at("exponent").get<double>(), A = f.at("amplitude").get<double>();
            std::string table = "x,y,stderr,log_x,log_y,fit_log_y,fit_y\n";
            for (const auto& pt : f.at("series")) {
                const double x = pt.at("x").get<double>(), y = pt.at("y").get<double>();
                const double fit_log_y = std::log(A) + k * std::log(x);
                table += csv_line({x, y, pt.at("stderr").get<double>(), std::log(x), std::log(y), fit_log_y,
                                   std::exp(fit_log_y)}) +
                         "\n";
            }
            write_atomic(out / (name + ".csv"), table);
            ++tables;
            char buf[256];
            std::snprintf(buf, sizeof buf, "%s: exponent %.6f +- %.6f (paper: %s), amplitude %.6g, chi2 %.3g, %zu points\n",
                          name.c_str(), k, f.at("exponent_stderr").get<double>(),
                          target_text(f.at("target_exponent").get<double>()).c_str(), A, f.at("chi2").get<double>(),
                          f.at("n_points").get<std::size_t>());
            summary += buf;
        }
        if (doc.contains("holds"))
            summary += std::string("identity: ") + (doc["holds"].get<bool>() ? "holds" : "FAILS") + "\n";
        if (doc.contains("groups"))
            for (const auto& g : doc["groups"])
                summary += "mgf h=" + format_double(g["h"].get<double>()) + ": relative variation of C " +
                           target_text(g["relative_variation"].get<double>()) + "\n";
    }
    if (tables == 0 && summary.empty()) warnings.push_back("no fits found under " + fits_dir.string() + "; the report is empty");
    write_atomic(out / "summary.txt", summary);
    return warnings;
}

} // namespace fkg

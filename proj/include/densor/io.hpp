#pragma once

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

#include "densor/alert.hpp"
#include "densor/types.hpp"

namespace densor {

// One parsed stream line: a timestamped cell change.  sign is +1 or -1;
// label is 0/1 when the file carries labels, -1 otherwise.
struct ChangeEvent {
    std::int64_t time = 0;
    EntryIndex entry;
    double delta = 0.0;
    int sign = +1;
    int label = -1;
};

struct EventFile {
    std::vector<std::uint32_t> dims;
    std::vector<ChangeEvent> events;
};

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

namespace detail {

inline std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        std::size_t p = line.find(sep, start);
        if (p == std::string::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, p - start));
        start = p + 1;
    }
}

inline std::int64_t parse_i64(const std::string& s, std::size_t lineno, const char* what) {
    std::size_t used = 0;
    std::int64_t v = 0;
    try {
        v = std::stoll(s, &used);
    } catch (const std::exception&) {
        throw DataError("line " + std::to_string(lineno) + ": bad " + what + " '" + s + "'");
    }
    if (used != s.size()) throw DataError("line " + std::to_string(lineno) + ": bad " + what + " '" + s + "'");
    return v;
}

inline std::uint32_t parse_coord(const std::string& s, std::size_t lineno, const char* what) {
    std::int64_t v = parse_i64(s, lineno, what);
    if (v < 1 || v > std::numeric_limits<std::uint32_t>::max())
        throw DataError("line " + std::to_string(lineno) + ": " + what + " out of range: " + s);
    return static_cast<std::uint32_t>(v);
}

inline double parse_double(const std::string& s, std::size_t lineno, const char* what) {
    std::size_t used = 0;
    double v = 0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw DataError("line " + std::to_string(lineno) + ": bad " + what + " '" + s + "'");
    }
    if (used != s.size() || !std::isfinite(v))
        throw DataError("line " + std::to_string(lineno) + ": bad " + what + " '" + s + "'");
    return v;
}

}  // namespace detail

// CSV event stream.  Comment lines start with '#'.  The first data line may be
// a header "dims,I_1,...,I_N"; otherwise dims must be supplied by the caller.
// Event lines are "time,i_1,...,i_N,delta[,sign[,label]]" with 1-based
// coordinates.  Times must be nondecreasing unless sort_times is set.
inline EventFile read_events(std::istream& in, std::vector<std::uint32_t> declared_dims = {},
                             bool sort_times = false) {
    EventFile out;
    out.dims = std::move(declared_dims);
    std::string line;
    std::size_t lineno = 0;
    bool have_time = false;
    std::int64_t last_time = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cols = detail::split(line, ',');
        if (cols[0] == "dims") {
            std::vector<std::uint32_t> dims;
            for (std::size_t i = 1; i < cols.size(); ++i)
                dims.push_back(detail::parse_coord(cols[i], lineno, "dimension"));
            if (dims.size() < 2) throw DataError("line " + std::to_string(lineno) + ": need at least 2 modes");
            if (!out.dims.empty() && out.dims != dims)
                throw DataError("line " + std::to_string(lineno) + ": header dims disagree with declared dims");
            out.dims = dims;
            continue;
        }
        if (out.dims.empty())
            throw DataError("line " + std::to_string(lineno) + ": no dims header and none declared");
        std::size_t n = out.dims.size();
        if (cols.size() < n + 2 || cols.size() > n + 4)
            throw DataError("line " + std::to_string(lineno) + ": expected " + std::to_string(n + 2) + " to " +
                            std::to_string(n + 4) + " fields, got " + std::to_string(cols.size()));
        ChangeEvent ev;
        ev.time = detail::parse_i64(cols[0], lineno, "time");
        ev.entry.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            ev.entry[i] = detail::parse_coord(cols[1 + i], lineno, "coordinate");
            if (ev.entry[i] > out.dims[i])
                throw DataError("line " + std::to_string(lineno) + ": coordinate " + cols[1 + i] +
                                " exceeds mode " + std::to_string(i + 1) + " size " + std::to_string(out.dims[i]));
        }
        ev.delta = detail::parse_double(cols[1 + n], lineno, "delta");
        if (!(ev.delta > 0.0)) throw DataError("line " + std::to_string(lineno) + ": delta must be positive");
        if (cols.size() >= n + 3) {
            if (cols[n + 2] == "+") {
                ev.sign = +1;
            } else if (cols[n + 2] == "-") {
                ev.sign = -1;
            } else {
                throw DataError("line " + std::to_string(lineno) + ": bad sign '" + cols[n + 2] + "'");
            }
        }
        if (cols.size() == n + 4) {
            if (cols[n + 3] != "0" && cols[n + 3] != "1")
                throw DataError("line " + std::to_string(lineno) + ": bad label '" + cols[n + 3] + "'");
            ev.label = cols[n + 3] == "1" ? 1 : 0;
        }
        if (have_time && ev.time < last_time && !sort_times)
            throw DataError("line " + std::to_string(lineno) + ": time " + std::to_string(ev.time) +
                            " goes backwards (use sorting to accept unordered input)");
        last_time = ev.time;
        have_time = true;
        out.events.push_back(std::move(ev));
    }
    if (out.dims.empty()) throw DataError("event stream has no dims header and none were declared");
    if (sort_times)
        std::stable_sort(out.events.begin(), out.events.end(),
                         [](const ChangeEvent& a, const ChangeEvent& b) { return a.time < b.time; });
    return out;
}

inline EventFile read_events_file(const std::string& path, std::vector<std::uint32_t> declared_dims = {},
                                  bool sort_times = false) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    return read_events(in, std::move(declared_dims), sort_times);
}

inline void write_events(std::ostream& os, const std::vector<std::uint32_t>& dims,
                         const std::vector<ChangeEvent>& events) {
    os << "dims";
    for (std::uint32_t d : dims) os << "," << d;
    os << "\n";
    for (const ChangeEvent& ev : events) {
        os << ev.time;
        for (std::uint32_t c : ev.entry) os << "," << c;
        os << "," << fmt_double(ev.delta) << "," << (ev.sign < 0 ? "-" : "+");
        if (ev.label >= 0) os << "," << ev.label;
        os << "\n";
    }
}

inline std::string format_slices(const std::vector<SliceIndex>& slices) {
    std::string s;
    for (std::size_t i = 0; i < slices.size(); ++i) {
        if (i) s += ";";
        s += std::to_string(slices[i].mode) + ":" + std::to_string(slices[i].coord);
    }
    return s;
}

inline std::vector<SliceIndex> parse_slices(const std::string& s, std::size_t lineno) {
    std::vector<SliceIndex> out;
    if (s.empty()) return out;
    for (const std::string& part : detail::split(s, ';')) {
        std::vector<std::string> mc = detail::split(part, ':');
        if (mc.size() != 2) throw DataError("line " + std::to_string(lineno) + ": bad slice '" + part + "'");
        out.push_back({detail::parse_coord(mc[0], lineno, "mode"), detail::parse_coord(mc[1], lineno, "coord")});
    }
    return out;
}

// Synthetic stream: a uniform background plus square blocks injected at
// distinct ticks of the time mode.  Every event's stream time is its
// time-mode coordinate.  Block events carry label 1, background label 0.
struct InjectionSpec {
    std::vector<std::uint32_t> dims;
    std::uint32_t time_mode = 3;                  // 1-based
    std::vector<std::uint32_t> wide_modes = {1, 2};
    std::vector<std::uint32_t> block_sizes;       // one block per element
    double block_value = 1.0;
    std::size_t background_events = 0;
    double background_value = 1.0;
};

struct InjectedBlock {
    std::vector<SliceIndex> slices;
    std::int64_t tick = 0;
    std::uint32_t size = 0;
};

struct InjectedStream {
    std::vector<std::uint32_t> dims;
    std::vector<ChangeEvent> events;
    std::vector<InjectedBlock> blocks;
};

inline InjectedStream generate_injected(const InjectionSpec& spec, std::uint64_t seed) {
    const std::size_t n = spec.dims.size();
    if (n < 2) throw std::invalid_argument("need at least 2 modes");
    if (spec.time_mode == 0 || spec.time_mode > n) throw std::invalid_argument("time mode out of range");
    for (std::uint32_t m : spec.wide_modes) {
        if (m == 0 || m > n || m == spec.time_mode) throw std::invalid_argument("bad wide mode");
    }
    if (spec.block_sizes.size() > spec.dims[spec.time_mode - 1])
        throw std::invalid_argument("more blocks than ticks");
    std::mt19937_64 rng(seed);
    InjectedStream out;
    out.dims = spec.dims;

    for (std::size_t i = 0; i < spec.background_events; ++i) {
        ChangeEvent ev;
        ev.entry.resize(n);
        for (std::size_t m = 0; m < n; ++m)
            ev.entry[m] = std::uniform_int_distribution<std::uint32_t>(1, spec.dims[m])(rng);
        ev.time = ev.entry[spec.time_mode - 1];
        ev.delta = spec.background_value;
        ev.label = 0;
        out.events.push_back(std::move(ev));
    }

    std::vector<std::uint32_t> ticks(spec.dims[spec.time_mode - 1]);
    for (std::size_t i = 0; i < ticks.size(); ++i) ticks[i] = static_cast<std::uint32_t>(i + 1);
    std::shuffle(ticks.begin(), ticks.end(), rng);

    for (std::size_t b = 0; b < spec.block_sizes.size(); ++b) {
        std::uint32_t s = spec.block_sizes[b];
        std::uint32_t tick = ticks[b];
        InjectedBlock blk;
        blk.tick = tick;
        blk.size = s;
        std::vector<std::vector<std::uint32_t>> coords(n);
        for (std::size_t m = 0; m < n; ++m) {
            bool wide = std::find(spec.wide_modes.begin(), spec.wide_modes.end(), m + 1) != spec.wide_modes.end();
            if (m + 1 == spec.time_mode) {
                coords[m] = {tick};
            } else if (wide) {
                if (s > spec.dims[m]) throw std::invalid_argument("block wider than mode " + std::to_string(m + 1));
                std::vector<std::uint32_t> all(spec.dims[m]);
                for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<std::uint32_t>(i + 1);
                std::vector<std::uint32_t> pick;
                std::sample(all.begin(), all.end(), std::back_inserter(pick), s, rng);
                coords[m] = std::move(pick);
            } else {
                coords[m] = {std::uniform_int_distribution<std::uint32_t>(1, spec.dims[m])(rng)};
            }
            for (std::uint32_t c : coords[m]) blk.slices.push_back({static_cast<std::uint32_t>(m + 1), c});
        }
        std::sort(blk.slices.begin(), blk.slices.end());
        // all combinations across the per-mode coordinate lists
        std::vector<std::size_t> idx(n, 0);
        for (;;) {
            ChangeEvent ev;
            ev.entry.resize(n);
            for (std::size_t m = 0; m < n; ++m) ev.entry[m] = coords[m][idx[m]];
            ev.time = tick;
            ev.delta = spec.block_value;
            ev.label = 1;
            out.events.push_back(std::move(ev));
            std::size_t m = 0;
            while (m < n && ++idx[m] == coords[m].size()) idx[m++] = 0;
            if (m == n) break;
        }
        out.blocks.push_back(std::move(blk));
    }
    std::stable_sort(out.events.begin(), out.events.end(),
                     [](const ChangeEvent& a, const ChangeEvent& b) { return a.time < b.time; });
    return out;
}

inline void write_manifest(std::ostream& os, const std::vector<InjectedBlock>& blocks) {
    os << "# block,<id>,<tick>,<size>,<slices>\n";
    for (std::size_t i = 0; i < blocks.size(); ++i)
        os << "block," << i << "," << blocks[i].tick << "," << blocks[i].size << ","
           << format_slices(blocks[i].slices) << "\n";
}

inline std::vector<InjectedBlock> read_manifest(std::istream& in) {
    std::vector<InjectedBlock> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cols = detail::split(line, ',');
        if (cols.size() != 5 || cols[0] != "block")
            throw DataError("line " + std::to_string(lineno) + ": bad manifest record");
        InjectedBlock b;
        b.tick = detail::parse_i64(cols[2], lineno, "tick");
        b.size = detail::parse_coord(cols[3], lineno, "size");
        b.slices = parse_slices(cols[4], lineno);
        out.push_back(std::move(b));
    }
    return out;
}

inline void write_alerts(std::ostream& os, const std::vector<AlertRecord>& top) {
    os << "# alert,<rank>,<time>,<density>,<mass>,<slices>\n";
    for (std::size_t i = 0; i < top.size(); ++i)
        os << "alert," << i + 1 << "," << top[i].time << "," << fmt_double(top[i].density) << ","
           << fmt_double(top[i].mass) << "," << format_slices(top[i].slices->slices) << "\n";
}

struct ParsedAlert {
    std::int64_t time = 0;
    double density = 0.0;
    double mass = 0.0;
    std::vector<SliceIndex> slices;
};

inline std::vector<ParsedAlert> read_alerts(std::istream& in) {
    std::vector<ParsedAlert> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cols = detail::split(line, ',');
        if (cols.size() != 6 || cols[0] != "alert")
            throw DataError("line " + std::to_string(lineno) + ": bad alert record");
        ParsedAlert a;
        a.time = detail::parse_i64(cols[2], lineno, "time");
        a.density = detail::parse_double(cols[3], lineno, "density");
        a.mass = detail::parse_double(cols[4], lineno, "mass");
        a.slices = parse_slices(cols[5], lineno);
        out.push_back(std::move(a));
    }
    return out;
}

// A block counts as found when some record keeps at least half of the block's
// slices and is itself at most 10x the block's slice count.
inline double score_recall(const std::vector<std::vector<SliceIndex>>& records,
                           const std::vector<InjectedBlock>& blocks) {
    if (blocks.empty()) throw std::invalid_argument("no blocks to score");
    std::size_t found = 0;
    for (const InjectedBlock& b : blocks) {
        bool hit = false;
        for (const std::vector<SliceIndex>& rec : records) {
            if (rec.size() > 10 * b.slices.size()) continue;
            std::size_t kept = 0;
            for (const SliceIndex& q : b.slices)
                if (std::binary_search(rec.begin(), rec.end(), q)) ++kept;
            if (2 * kept >= b.slices.size()) {
                hit = true;
                break;
            }
        }
        if (hit) ++found;
    }
    return static_cast<double>(found) / static_cast<double>(blocks.size());
}

// Rank-based AUC with midranks for ties.  NaN when a class is missing.
inline double auc_score(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size()) throw std::invalid_argument("scores/labels size mismatch");
    std::vector<std::size_t> idx(scores.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    double rank_pos = 0.0;
    std::size_t npos = 0;
    std::size_t i = 0;
    while (i < idx.size()) {
        std::size_t j = i;
        while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) ++j;
        double midrank = 0.5 * static_cast<double>(i + 1 + j);  // averaged 1-based rank
        for (std::size_t k = i; k < j; ++k) {
            if (labels[idx[k]] == 1) {
                rank_pos += midrank;
                ++npos;
            }
        }
        i = j;
    }
    std::size_t nneg = scores.size() - npos;
    if (npos == 0 || nneg == 0) return std::numeric_limits<double>::quiet_NaN();
    double u = rank_pos - 0.5 * static_cast<double>(npos) * static_cast<double>(npos + 1);
    return u / (static_cast<double>(npos) * static_cast<double>(nneg));
}

}  // namespace densor

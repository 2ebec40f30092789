// densor: streaming dense-subtensor detection over CSV event streams.
//
// Modes:
//   batch   fold the whole stream into one tensor, detect once
//   stream  maintain the detection across increments and decrements
//   alert   sliding-window detection with top-k spike reports
//   gen     synthetic background stream with injected dense blocks
//   score   recall of a block manifest against an alert report
//
// Exit codes: 0 ok, 1 usage, 2 bad data, 3 self-check violation.

#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "densor/densor.hpp"

namespace {

std::vector<std::uint32_t> parse_u32_list(const std::string& s, const char* what) {
    std::vector<std::uint32_t> out;
    for (const std::string& part : densor::detail::split(s, ',')) {
        try {
            unsigned long v = std::stoul(part);
            if (v == 0 || v > 0xffffffffull) throw std::out_of_range(part);
            out.push_back(static_cast<std::uint32_t>(v));
        } catch (const std::exception&) {
            throw densor::DataError(std::string("bad ") + what + " list: '" + s + "'");
        }
    }
    return out;
}

struct CommonInput {
    std::string file;
    std::string dims;
    bool sort = false;

    densor::EventFile load() const {
        std::vector<std::uint32_t> declared;
        if (!dims.empty()) declared = parse_u32_list(dims, "dims");
        return densor::read_events_file(file, std::move(declared), sort);
    }
};

void print_selection(std::ostream& os, const densor::DenseSelection& sel) {
    os << "selection," << densor::fmt_double(sel.mass) << "," << densor::fmt_double(sel.density) << ","
       << densor::format_slices(sel.slices) << "\n";
}

int run_batch(const CommonInput& in, const std::string& out_path) {
    densor::EventFile ef = in.load();
    densor::SparseTensor t(ef.dims);
    for (const densor::ChangeEvent& ev : ef.events) t.apply_delta(ev.entry, ev.sign * ev.delta);
    densor::DenseSelection sel = densor::detect_static(t);
    if (out_path.empty()) {
        print_selection(std::cout, sel);
    } else {
        std::ofstream os(out_path);
        if (!os) throw densor::DataError("cannot write " + out_path);
        print_selection(os, sel);
    }
    return 0;
}

int run_stream(const CommonInput& in, std::size_t self_check, const std::string& out_path) {
    densor::EventFile ef = in.load();
    std::ofstream file_os;
    if (!out_path.empty()) {
        file_os.open(out_path);
        if (!file_os) throw densor::DataError("cannot write " + out_path);
    }
    std::ostream& os = out_path.empty() ? std::cout : file_os;
    densor::StreamEngine eng(ef.dims);
    std::size_t i = 0;
    for (const densor::ChangeEvent& ev : ef.events) {
        if (ev.sign > 0) {
            eng.apply_increment(ev.entry, ev.delta);
        } else {
            eng.apply_decrement(ev.entry, ev.delta);
        }
        ++i;
        os << "event," << i << "," << ev.time << "," << densor::fmt_double(eng.selection_density()) << "\n";
        if (self_check > 0 && i % self_check == 0) {
            densor::Report r = eng.verify();
            if (!r.ok) {
                std::cerr << "self-check failed after event " << i << ": " << r.detail << "\n";
                return 3;
            }
        }
    }
    print_selection(os, eng.selection());
    return 0;
}

int run_alert(const CommonInput& in, std::int64_t window, std::size_t topk, double dedup_jaccard,
              std::size_t self_check, bool stats, const std::string& out_prefix) {
    densor::EventFile ef = in.load();
    std::ofstream trace_os;
    if (!out_prefix.empty()) {
        trace_os.open(out_prefix + ".trace");
        if (!trace_os) throw densor::DataError("cannot write " + out_prefix + ".trace");
    }
    densor::AlertEngine eng(ef.dims, window);
    densor::AlertDedup dedup(window, dedup_jaccard);
    std::vector<double> scores;
    std::vector<int> labels;
    std::size_t changes = 0;
    int bad = 0;
    for (const densor::ChangeEvent& ev : ef.events) {
        if (ev.sign < 0) throw densor::DataError("alert streams are increment-only; got a '-' event");
        eng.step({ev.time, ev.entry, ev.delta}, [&](const densor::AlertRecord& r) {
            dedup.add(r);
            if (trace_os.is_open()) trace_os << r.time << "," << densor::fmt_double(r.density) << "\n";
            ++changes;
            if (self_check > 0 && changes % self_check == 0 && bad == 0) {
                densor::Report rep = eng.engine().verify();
                if (!rep.ok) {
                    std::cerr << "self-check failed after change " << changes << ": " << rep.detail << "\n";
                    bad = 3;
                }
            }
        });
        if (bad) return bad;
        if (ev.label >= 0) {
            scores.push_back(eng.engine().contains(ev.entry) ? eng.engine().selection_density() : 0.0);
            labels.push_back(ev.label);
        }
    }
    std::vector<densor::AlertRecord> top = dedup.top(topk);
    densor::write_alerts(std::cout, top);
    if (!out_prefix.empty()) {
        std::ofstream os(out_prefix + ".alerts");
        if (!os) throw densor::DataError("cannot write " + out_prefix + ".alerts");
        densor::write_alerts(os, top);
    }
    if (!scores.empty()) {
        double auc = densor::auc_score(scores, labels);
        if (std::isfinite(auc)) std::cout << "auc," << densor::fmt_double(auc) << "\n";
    }
    if (stats)
        std::cout << "stats,peak_nnz," << eng.peak_nnz() << ",peak_window_events," << eng.peak_window_events()
                  << "\n";
    return 0;
}

int run_gen(const std::string& dims, std::uint32_t time_mode, const std::string& wide_modes,
            const std::string& sizes, double block_value, std::size_t background, double background_value,
            std::uint64_t seed, const std::string& out_prefix) {
    densor::InjectionSpec spec;
    spec.dims = parse_u32_list(dims, "dims");
    spec.time_mode = time_mode;
    spec.wide_modes = parse_u32_list(wide_modes, "wide modes");
    spec.block_sizes = parse_u32_list(sizes, "sizes");
    spec.block_value = block_value;
    spec.background_events = background;
    spec.background_value = background_value;
    densor::InjectedStream g = densor::generate_injected(spec, seed);
    {
        std::ofstream os(out_prefix + ".events");
        if (!os) throw densor::DataError("cannot write " + out_prefix + ".events");
        densor::write_events(os, g.dims, g.events);
    }
    {
        std::ofstream os(out_prefix + ".manifest");
        if (!os) throw densor::DataError("cannot write " + out_prefix + ".manifest");
        densor::write_manifest(os, g.blocks);
    }
    std::cout << "generated," << g.events.size() << "," << g.blocks.size() << "\n";
    return 0;
}

int run_score(const std::string& alerts_path, const std::string& manifest_path) {
    std::ifstream af(alerts_path);
    if (!af) throw densor::DataError("cannot open " + alerts_path);
    std::ifstream mf(manifest_path);
    if (!mf) throw densor::DataError("cannot open " + manifest_path);
    std::vector<densor::ParsedAlert> alerts = densor::read_alerts(af);
    std::vector<densor::InjectedBlock> blocks = densor::read_manifest(mf);
    std::vector<std::vector<densor::SliceIndex>> records;
    records.reserve(alerts.size());
    for (densor::ParsedAlert& a : alerts) {
        std::sort(a.slices.begin(), a.slices.end());
        records.push_back(std::move(a.slices));
    }
    for (densor::InjectedBlock& b : blocks) std::sort(b.slices.begin(), b.slices.end());
    std::cout << "recall," << densor::fmt_double(densor::score_recall(records, blocks)) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"streaming dense-subtensor detection"};
    app.require_subcommand(1);

    CommonInput batch_in, stream_in, alert_in;
    std::string batch_out, stream_out, alert_out;
    std::size_t stream_check = 0, alert_check = 0;
    std::int64_t window = 0;
    std::size_t topk = 10;
    double dedup_jaccard = 0.5;
    bool stats = false;

    CLI::App* batch = app.add_subcommand("batch", "one-shot detection over the folded stream");
    batch->add_option("file", batch_in.file, "event csv")->required();
    batch->add_option("--dims", batch_in.dims, "mode sizes, e.g. 3,3,2 (overrides a missing header)");
    batch->add_flag("--sort", batch_in.sort, "stable-sort events by time instead of rejecting disorder");
    batch->add_option("--out", batch_out, "write the selection here instead of stdout");

    CLI::App* stream = app.add_subcommand("stream", "maintained detection over increments/decrements");
    stream->add_option("file", stream_in.file, "event csv")->required();
    stream->add_option("--dims", stream_in.dims, "mode sizes");
    stream->add_flag("--sort", stream_in.sort, "stable-sort events by time");
    stream->add_option("--self-check", stream_check, "verify invariants every K events");
    stream->add_option("--out", stream_out, "write per-event lines here instead of stdout");

    CLI::App* alert = app.add_subcommand("alert", "sliding-window detection with top-k reports");
    alert->add_option("file", alert_in.file, "event csv (increments only)")->required();
    alert->add_option("--dims", alert_in.dims, "mode sizes");
    alert->add_flag("--sort", alert_in.sort, "stable-sort events by time");
    alert->add_option("--window", window, "window length in ticks")->required()->check(CLI::PositiveNumber);
    alert->add_option("--topk", topk, "how many alerts to keep");
    alert->add_option("--dedup-jaccard", dedup_jaccard, "overlap above which consecutive reports merge")
        ->check(CLI::Range(0.0, 1.0));
    alert->add_option("--self-check", alert_check, "verify invariants every K changes");
    alert->add_flag("--stats", stats, "print peak entry counts");
    alert->add_option("--out", alert_out, "prefix for .trace and .alerts files");

    std::string gen_dims, gen_wide = "1,2", gen_sizes;
    std::uint32_t gen_time_mode = 3;
    double gen_value = 1.0, gen_bg_value = 1.0;
    std::size_t gen_background = 50000;
    std::uint64_t gen_seed = 0;
    std::string gen_out;
    CLI::App* gen = app.add_subcommand("gen", "synthetic stream with injected blocks");
    gen->add_option("--dims", gen_dims, "mode sizes")->required();
    gen->add_option("--time-mode", gen_time_mode, "mode whose coordinate is the event tick");
    gen->add_option("--wide-modes", gen_wide, "modes a block spans with size s");
    gen->add_option("--sizes", gen_sizes, "block sizes, one block per entry")->required();
    gen->add_option("--block-value", gen_value, "value of each block cell");
    gen->add_option("--background", gen_background, "background event count");
    gen->add_option("--background-value", gen_bg_value, "value of each background cell");
    gen->add_option("--seed", gen_seed, "rng seed");
    gen->add_option("--out", gen_out, "prefix for .events and .manifest files")->required();

    std::string score_alerts, score_manifest;
    CLI::App* score = app.add_subcommand("score", "recall of injected blocks in an alert report");
    score->add_option("--alerts", score_alerts, "alert report file")->required();
    score->add_option("--manifest", score_manifest, "block manifest file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (batch->parsed()) return run_batch(batch_in, batch_out);
        if (stream->parsed()) return run_stream(stream_in, stream_check, stream_out);
        if (alert->parsed())
            return run_alert(alert_in, window, topk, dedup_jaccard, alert_check, stats, alert_out);
        if (gen->parsed())
            return run_gen(gen_dims, gen_time_mode, gen_wide, gen_sizes, gen_value, gen_background, gen_bg_value,
                           gen_seed, gen_out);
        if (score->parsed()) return run_score(score_alerts, score_manifest);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}

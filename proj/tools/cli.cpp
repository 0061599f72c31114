#include "cli.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <ostream>

#include "mixco/errors.hpp"
#include "mixco/gradcheck_suite.hpp"

namespace mixco::cli {

namespace fs = std::filesystem;

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
    T v{};
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc{} || ptr != value.data() + value.size()) {
        throw ConfigError(key + ": cannot parse '" + value + "'");
    }
    return v;
}

bool apply_cli_key(CliSettings& s, const std::string& key, const std::string& value) {
    if (key == "data") s.data = value;
    else if (key == "encoder") s.encoder = value;
    else if (key == "classes") s.classes = parse_number<int>(key, value);
    else if (key == "per_class") s.per_class = parse_number<std::size_t>(key, value);
    else if (key == "dim") s.dim = parse_number<std::size_t>(key, value);
    else if (key == "center_spread") s.center_spread = parse_number<double>(key, value);
    else if (key == "within_sigma") s.within_sigma = parse_number<double>(key, value);
    else if (key == "data_seed") s.data_seed = parse_number<std::uint64_t>(key, value);
    else if (key == "probe_epochs") s.probe_epochs = parse_number<std::size_t>(key, value);
    else if (key == "probe_lr") s.probe_lr = parse_number<double>(key, value);
    else if (key == "probe_batch_size") s.probe_batch_size = parse_number<std::size_t>(key, value);
    else if (key == "probe_momentum") s.probe_momentum = parse_number<double>(key, value);
    else if (key == "test_fraction") s.test_fraction = parse_number<double>(key, value);
    else if (key == "split_seed") s.split_seed = parse_number<std::uint64_t>(key, value);
    else if (key == "gradcheck_instances") s.gradcheck_instances = parse_number<std::size_t>(key, value);
    else return false;
    return true;
}

// Holds <out>/.mixco.lock for the lifetime of a run.
class DirectoryLock {
public:
    explicit DirectoryLock(const fs::path& dir) : path_(dir / ".mixco.lock") {
        std::FILE* f = std::fopen(path_.c_str(), "wx");
        if (f == nullptr) {
            throw FileError("output directory '" + dir.string() + "' is locked by another run (remove " +
                            path_.string() + " if stale)");
        }
        std::fclose(f);
    }
    ~DirectoryLock() {
        std::error_code ec;
        fs::remove(path_, ec);
    }
    DirectoryLock(const DirectoryLock&) = delete;
    DirectoryLock& operator=(const DirectoryLock&) = delete;

private:
    fs::path path_;
};

void write_manifest(const fs::path& dir, const std::string& subcommand, const Effective& eff) {
    std::ofstream out(dir / "manifest.cfg", std::ios::trunc);
    if (!out) {
        throw FileError("cannot write manifest in '" + dir.string() + "'");
    }
    out << "# mixco run manifest (" << subcommand << "); usable as --config\n";
    out << render_key_values(to_key_values(eff));
}

Dataset require_dataset(const CliSettings& s) {
    if (s.data.empty()) {
        throw ConfigError("data: a dataset path is required for this subcommand");
    }
    Dataset d = load_dataset(s.data);
    d.validate();
    return d;
}

EncoderParams resolve_encoder(const Effective& eff) {
    if (eff.cli.encoder.empty()) {
        return initial_encoder(eff.run);
    }
    return load_encoder(eff.cli.encoder);
}

int cmd_gen_data(const Effective& eff, const fs::path& dir, std::ostream& out) {
    ClusterSpec spec{eff.cli.classes, eff.cli.per_class, eff.cli.dim, eff.cli.center_spread, eff.cli.within_sigma};
    Rng rng = Rng::derive(eff.cli.data_seed, "dataset");
    const Dataset d = generate_gaussian_clusters(spec, rng);
    save_dataset(d, dir / "dataset.bin");
    out << "wrote " << (dir / "dataset.bin").string() << " (N=" << d.size() << ", D=" << d.dim()
        << ", classes=" << d.class_count << ")\n";
    return kOk;
}

int cmd_pretrain(const Effective& eff, const fs::path& dir, std::ostream& out) {
    const Dataset d = require_dataset(eff.cli);
    const PretrainResult r = pretrain(eff.run, UnlabeledView(d), [&](const MetricsRecord& m) {
        out << format_metrics_line(m) << '\n';
    });
    save_encoder(r.encoder, dir / "encoder.bin");
    if (r.moco) {
        save_moco(*r.moco, dir / "checkpoint.bin");
    }
    write_metrics_log(dir / "metrics.log", r.metrics);
    write_timing_log(dir / "timing.log", r.metrics);
    out << "wrote " << (dir / "encoder.bin").string() << '\n';
    return kOk;
}

int cmd_linear_eval(const Effective& eff, const fs::path& dir, std::ostream& out) {
    const Dataset d = require_dataset(eff.cli);
    const EncoderParams enc = resolve_encoder(eff);
    Rng split_rng = Rng::derive(eff.cli.split_seed, "split");
    const auto [train, test] = split_train_test(d, eff.cli.test_fraction, split_rng);
    ProbeConfig pc;
    pc.epochs = eff.cli.probe_epochs;
    pc.lr0 = eff.cli.probe_lr;
    pc.batch_size = eff.cli.probe_batch_size;
    pc.momentum = eff.cli.probe_momentum;
    pc.seed = eff.run.seed;
    const ProbeResult r = linear_eval(enc, train, test, pc);
    const std::string line = "encoder=" + (eff.cli.encoder.empty() ? std::string("<init>") : eff.cli.encoder) +
                             " accuracy=" + fmt17(r.accuracy);
    out << "accuracy=" << fmt17(r.accuracy) << '\n';
    std::ofstream results(dir / "results.txt", std::ios::app);
    if (!results) {
        throw FileError("cannot append to " + (dir / "results.txt").string());
    }
    results << line << '\n';
    return kOk;
}

int cmd_metrics(const Effective& eff, std::ostream& out) {
    const Dataset d = require_dataset(eff.cli);
    const Tensor v = embed(resolve_encoder(eff), d.features);
    const ClusterIndex db = davies_bouldin(v, d.labels);
    const ClusterIndex ch = calinski_harabasz(v, d.labels);
    out << "davies_bouldin=" << fmt17(db.value) << (db.degenerate ? " (degenerate)" : "") << '\n';
    out << "calinski_harabasz=" << fmt17(ch.value) << (ch.degenerate ? " (degenerate)" : "") << '\n';
    return kOk;
}

int cmd_export(const Effective& eff, const fs::path& dir, std::ostream& out) {
    const Dataset d = require_dataset(eff.cli);
    export_embeddings(resolve_encoder(eff), d, dir / "embeddings.txt");
    out << "wrote " << (dir / "embeddings.txt").string() << '\n';
    return kOk;
}

int cmd_gradcheck(const Effective& eff, std::ostream& out) {
    const GradSuiteReport r = run_gradient_suite(eff.run.seed, eff.cli.gradcheck_instances);
    for (const auto& e : r.entries) {
        out << e.name << ": checks=" << e.instances << " max_relative_error=" << fmt17(e.worst.max_relative_error)
            << '\n';
    }
    const double worst = r.worst_relative_error();
    out << "worst_relative_error=" << fmt17(worst) << '\n';
    return worst < 1e-5 ? kOk : kDiverged;
}

}  // namespace

Effective resolve(const KeyValues& entries) {
    Effective eff;
    for (const auto& [key, value] : entries) {
        if (!apply_key_value(eff.run, key, value) && !apply_cli_key(eff.cli, key, value)) {
            throw ConfigError(key + ": unknown configuration key");
        }
    }
    eff.run.validate();
    return eff;
}

KeyValues to_key_values(const Effective& eff) {
    KeyValues kv = mixco::to_key_values(eff.run);
    const CliSettings& s = eff.cli;
    kv.insert(kv.end(), {
        {"data", s.data},
        {"encoder", s.encoder},
        {"classes", std::to_string(s.classes)},
        {"per_class", std::to_string(s.per_class)},
        {"dim", std::to_string(s.dim)},
        {"center_spread", fmt17(s.center_spread)},
        {"within_sigma", fmt17(s.within_sigma)},
        {"data_seed", std::to_string(s.data_seed)},
        {"probe_epochs", std::to_string(s.probe_epochs)},
        {"probe_lr", fmt17(s.probe_lr)},
        {"probe_batch_size", std::to_string(s.probe_batch_size)},
        {"probe_momentum", fmt17(s.probe_momentum)},
        {"test_fraction", fmt17(s.test_fraction)},
        {"split_seed", std::to_string(s.split_seed)},
        {"gradcheck_instances", std::to_string(s.gradcheck_instances)},
    });
    return kv;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"mixco: contrastive pretraining with mix-up semi-positives"};
    app.require_subcommand(1);
    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_dir;

    const std::vector<std::pair<std::string, std::string>> commands = {
        {"gen-data", "generate a synthetic Gaussian-cluster dataset"},
        {"pretrain", "self-supervised pretraining; writes checkpoint, metrics log and manifest"},
        {"linear-eval", "train a linear probe on frozen embeddings and report test accuracy"},
        {"metrics", "Davies-Bouldin and Calinski-Harabasz indices of the embeddings"},
        {"export-embeddings", "write per-sample embeddings as text"},
        {"gradcheck", "run the finite-difference gradient suite"},
    };
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("-c,--config", config_path, "key=value config file");
        sub->add_option("-s,--set", overrides, "override, key=value (repeatable)");
        sub->add_option("-o,--out", out_dir, "output directory");
    }

    std::vector<std::string> argv_store{"mixco"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const auto& a : argv_store) {
        argv.push_back(a.c_str());
    }
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kUsage;
    }
    const std::string subcommand = app.get_subcommands().front()->get_name();

    try {
        KeyValues entries;
        if (!config_path.empty()) {
            entries = load_key_values(config_path);
        }
        for (const auto& o : overrides) {
            entries.push_back(parse_override(o));
        }
        const Effective eff = resolve(entries);

        if (subcommand == "gradcheck" && out_dir.empty()) {
            return cmd_gradcheck(eff, out);
        }
        if (out_dir.empty()) {
            throw ConfigError("--out: an output directory is required for " + subcommand);
        }
        const fs::path dir(out_dir);
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec) {
            throw FileError("cannot create output directory '" + out_dir + "': " + ec.message());
        }
        DirectoryLock lock(dir);
        write_manifest(dir, subcommand, eff);

        if (subcommand == "gen-data") return cmd_gen_data(eff, dir, out);
        if (subcommand == "pretrain") return cmd_pretrain(eff, dir, out);
        if (subcommand == "linear-eval") return cmd_linear_eval(eff, dir, out);
        if (subcommand == "metrics") return cmd_metrics(eff, out);
        if (subcommand == "export-embeddings") return cmd_export(eff, dir, out);
        return cmd_gradcheck(eff, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kUsage;
    } catch (const DivergenceError& e) {
        err << "diverged: " << e.what() << '\n';
        return kDiverged;
    } catch (const FileError& e) {
        err << "i/o error: " << e.what() << '\n';
        return kIo;
    } catch (const FormatError& e) {
        err << "format error: " << e.what() << '\n';
        return kIo;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    }
}

}  // namespace mixco::cli

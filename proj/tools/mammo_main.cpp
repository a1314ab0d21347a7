#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "mammo/cli.hpp"

namespace {

using mammo::cli::RunConfig;

// Shared --config / --set plumbing. Overrides apply on top of the file, in
// the order given on the command line.
struct ConfigArgs {
    std::string config_file;
    std::vector<std::string> overrides;

    void attach(CLI::App* cmd) {
        cmd->add_option("-c,--config", config_file, "key = value configuration file");
        cmd->add_option("-s,--set", overrides,
                        "override a config key, e.g. --set seed=42 (repeatable)");
    }

    RunConfig resolve() const {
        RunConfig cfg;
        if (!config_file.empty()) cfg = mammo::cli::load_config_file(config_file);
        for (const std::string& kv : overrides) {
            const std::size_t eq = kv.find('=');
            if (eq == std::string::npos)
                throw mammo::ConfigError("--set expects key=value, got '" + kv + "'");
            cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
        }
        return cfg;
    }
};

mammo::cli::EvalSplit parse_split(const std::string& name) {
    if (name == "train") return mammo::cli::EvalSplit::Train;
    if (name == "val") return mammo::cli::EvalSplit::Val;
    if (name == "all") return mammo::cli::EvalSplit::All;
    throw mammo::ConfigError("split must be train|val|all, got '" + name + "'");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Screening mammography classification pipeline"};
    app.require_subcommand(1);

    ConfigArgs convert_args, preprocess_args, synth_args, train_args, eval_args, predict_args,
        report_args;
    std::string input_dir, output_dir;
    std::string artifact_path, split_name = "val", out_csv;
    std::vector<std::string> artifact_list;

    CLI::App* convert = app.add_subcommand("convert", "DICOM files to graymaps + sidecars");
    convert->add_option("input", input_dir, "directory of .dcm files")->required();
    convert->add_option("output", output_dir, "output directory")->required();
    convert_args.attach(convert);

    CLI::App* preprocess =
        app.add_subcommand("preprocess", "normalize/invert/resize converted graymaps");
    preprocess->add_option("input", input_dir, "directory of .pgm + .meta files")->required();
    preprocess->add_option("output", output_dir, "output directory")->required();
    preprocess_args.attach(preprocess);

    CLI::App* synth = app.add_subcommand("synth", "generate a seeded synthetic corpus");
    synth_args.attach(synth);

    CLI::App* train = app.add_subcommand("train", "train a model and write its artifact");
    train_args.attach(train);

    CLI::App* evaluate = app.add_subcommand("evaluate", "evaluate an artifact on a split");
    evaluate->add_option("artifact", artifact_path, "model artifact file")->required();
    evaluate->add_option("--split", split_name, "train|val|all (default val)");
    evaluate->add_option("-o,--out", out_csv, "write the report CSV here instead of stdout");
    eval_args.attach(evaluate);

    CLI::App* predict = app.add_subcommand("predict", "per-image probabilities from an artifact");
    predict->add_option("artifact", artifact_path, "model artifact file")->required();
    predict->add_option("--split", split_name, "train|val|all (default val)");
    predict->add_option("-o,--out", out_csv, "write the prediction CSV here instead of stdout");
    predict_args.attach(predict);

    CLI::App* report = app.add_subcommand("report", "comparison table over several artifacts");
    report->add_option("artifacts", artifact_list, "model artifact files")->required();
    report->add_option("-o,--out", out_csv, "write the comparison CSV here instead of stdout");
    report_args.attach(report);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? mammo::cli::kExitOk : mammo::cli::kExitUsage;
    }

    const auto csv_sink = [&](auto fn) {
        if (out_csv.empty()) return fn(std::cout);
        std::ofstream out(out_csv);
        if (!out) throw mammo::ConfigError("cannot write " + out_csv);
        return fn(out);
    };

    try {
        if (convert->parsed())
            return mammo::cli::cmd_convert(input_dir, output_dir, convert_args.resolve(),
                                           std::cerr)
                .exit_code();
        if (preprocess->parsed())
            return mammo::cli::cmd_preprocess(input_dir, output_dir, preprocess_args.resolve(),
                                              std::cerr)
                .exit_code();
        if (synth->parsed()) return mammo::cli::cmd_synth(synth_args.resolve(), std::cerr);
        if (train->parsed()) {
            mammo::cli::cmd_train(train_args.resolve(), std::cerr);
            return mammo::cli::kExitOk;
        }
        if (evaluate->parsed()) {
            const RunConfig cfg = eval_args.resolve();
            return csv_sink([&](std::ostream& out) {
                return mammo::cli::cmd_evaluate(artifact_path, cfg, parse_split(split_name), out,
                                                std::cerr);
            });
        }
        if (predict->parsed()) {
            const RunConfig cfg = predict_args.resolve();
            return csv_sink([&](std::ostream& out) {
                return mammo::cli::cmd_predict(artifact_path, cfg, parse_split(split_name), out,
                                               std::cerr);
            });
        }
        if (report->parsed()) {
            const RunConfig cfg = report_args.resolve();
            std::vector<std::filesystem::path> paths(artifact_list.begin(), artifact_list.end());
            return csv_sink([&](std::ostream& out) {
                return mammo::cli::cmd_report(paths, cfg, out, std::cerr);
            });
        }
    } catch (const mammo::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return mammo::cli::kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return mammo::cli::kExitPartialFailure;
    }
    return mammo::cli::kExitUsage;
}

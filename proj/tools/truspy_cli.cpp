// Command-line front end for the truspy simulator. Talks to the core
// exclusively through the C API in truspy/truspy.h.
//
//   truspy run    --config <file> [--seed N] [--out <dir>]
//   truspy sweep  --config <file> --param <path> --values v1,v2,... [--out <dir>]
//   truspy report --in <dir> --format json|csv [--out <file>]
//
// Exit codes: 0 success, 1 configuration error, 2 I/O error.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <truspy/truspy.h>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitIo = 2;

struct StringDeleter {
    void operator()(char* p) const { truspy_string_free(p); }
};
using ApiString = std::unique_ptr<char, StringDeleter>;

int exit_code_for(truspy_status status) {
    switch (status) {
    case TRUSPY_OK:
        return kExitOk;
    case TRUSPY_ERR_IO:
        return kExitIo;
    default:
        return kExitConfig;
    }
}

int report_api_error(const char* what, truspy_status status) {
    std::cerr << "truspy: " << what << ": " << truspy_last_error() << "\n";
    return exit_code_for(status);
}

bool read_file(const std::string& path, std::string& out) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        return false;
    std::ostringstream buf;
    buf << in.rdbuf();
    out = buf.str();
    return in.good() || in.eof();
}

bool write_file(const std::string& path, const std::string& content) {
    std::error_code ec;
    const std::filesystem::path p(path);
    if (p.has_parent_path())
        std::filesystem::create_directories(p.parent_path(), ec);
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out)
        return false;
    out << content;
    out.flush();
    return out.good();
}

int emit(const std::string& content, const std::string& path) {
    if (path.empty()) {
        std::cout << content;
        return kExitOk;
    }
    if (!write_file(path, content)) {
        std::cerr << "truspy: cannot write " << path << "\n";
        return kExitIo;
    }
    return kExitOk;
}

int cmd_run(const std::string& config_path, bool has_seed, uint64_t seed,
            const std::string& out_dir) {
    std::string config;
    if (!read_file(config_path, config)) {
        std::cerr << "truspy: cannot read config " << config_path << "\n";
        return kExitIo;
    }
    char* raw = nullptr;
    const truspy_status status =
        truspy_run_config_json(config.c_str(), has_seed ? 1 : 0, seed, &raw);
    if (status != TRUSPY_OK)
        return report_api_error("run failed", status);
    ApiString report(raw);
    const std::string path =
        out_dir.empty() ? std::string()
                        : (std::filesystem::path(out_dir) / "report.json").string();
    return emit(report.get(), path);
}

int cmd_sweep(const std::string& config_path, const std::string& param,
              const std::string& values, const std::string& out_dir) {
    std::string config;
    if (!read_file(config_path, config)) {
        std::cerr << "truspy: cannot read config " << config_path << "\n";
        return kExitIo;
    }
    char* raw = nullptr;
    const truspy_status status =
        truspy_sweep_config_json(config.c_str(), param.c_str(), values.c_str(), &raw);
    if (status != TRUSPY_OK)
        return report_api_error("sweep failed", status);
    ApiString reports(raw);
    const std::string path =
        out_dir.empty() ? std::string()
                        : (std::filesystem::path(out_dir) / "sweep.json").string();
    return emit(reports.get(), path);
}

int cmd_report(const std::string& in_dir, const std::string& format,
               const std::string& out_path) {
    std::error_code ec;
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(in_dir, ec)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json")
            files.push_back(entry.path());
    }
    if (ec) {
        std::cerr << "truspy: cannot read directory " << in_dir << "\n";
        return kExitIo;
    }
    if (files.empty()) {
        std::cerr << "truspy: no report JSON files in " << in_dir << "\n";
        return kExitIo;
    }
    std::sort(files.begin(), files.end());

    // Flatten every document (object or array of objects) into one array.
    nlohmann::ordered_json merged = nlohmann::ordered_json::array();
    for (const auto& file : files) {
        std::string text;
        if (!read_file(file.string(), text)) {
            std::cerr << "truspy: cannot read " << file << "\n";
            return kExitIo;
        }
        nlohmann::ordered_json doc;
        try {
            doc = nlohmann::ordered_json::parse(text);
        } catch (const nlohmann::ordered_json::exception& e) {
            std::cerr << "truspy: " << file << " is not valid JSON: " << e.what() << "\n";
            return kExitConfig;
        }
        if (doc.is_array()) {
            for (auto& item : doc)
                merged.push_back(std::move(item));
        } else {
            merged.push_back(std::move(doc));
        }
    }

    const nlohmann::ordered_json& doc =
        merged.size() == 1 ? merged.front() : merged;
    if (format == "json")
        return emit(doc.dump(2) + "\n", out_path);

    char* raw = nullptr;
    const truspy_status status = truspy_reports_to_csv(doc.dump().c_str(), &raw);
    if (status != TRUSPY_OK)
        return report_api_error("report conversion failed", status);
    ApiString csv(raw);
    return emit(csv.get(), out_path);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"two-world cache side-channel attack and countermeasure simulator"};
    app.require_subcommand(1);
    app.set_version_flag("--version", truspy_version());

    std::string config_path, out_dir, param, values, in_dir, out_path;
    std::string format = "json";
    uint64_t seed = 0;

    CLI::App* run = app.add_subcommand("run", "run a scenario and report results");
    run->add_option("--config", config_path, "scenario JSON file")->required();
    CLI::Option* seed_opt = run->add_option("--seed", seed, "override the config seed");
    run->add_option("--out", out_dir, "directory for report.json (default: stdout)");

    CLI::App* sw = app.add_subcommand("sweep", "run one scenario per parameter value");
    sw->add_option("--config", config_path, "scenario JSON file")->required();
    sw->add_option("--param", param, "dotted config path, e.g. attack.noise_flip_probability")
        ->required();
    sw->add_option("--values", values, "comma-separated values")->required();
    sw->add_option("--out", out_dir, "directory for sweep.json (default: stdout)");

    CLI::App* rep = app.add_subcommand("report", "re-emit stored reports");
    rep->add_option("--in", in_dir, "directory containing report JSON files")->required();
    rep->add_option("--format", format, "json or csv")
        ->check(CLI::IsMember({"json", "csv"}));
    rep->add_option("--out", out_path, "output file (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    if (run->parsed())
        return cmd_run(config_path, seed_opt->count() > 0, seed, out_dir);
    if (sw->parsed())
        return cmd_sweep(config_path, param, values, out_dir);
    return cmd_report(in_dir, format, out_path);
}

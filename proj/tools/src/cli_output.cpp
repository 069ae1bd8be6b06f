#include "cli_output.hpp"

#include "navtrace/common.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <sstream>
#include <system_error>

#include <unistd.h>

namespace navtrace::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::string Provenance::comment_line() const {
    return "# " + version + " config_hash=" + config_hash + " seed=" + std::to_string(seed);
}

void write_atomic(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw std::runtime_error("write failed: " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp);
        throw std::runtime_error("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
    }
}

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(4);
    os << v;
    return os.str();
}

}  // namespace

std::string markdown_report(const fs::path& dir) {
    std::vector<fs::path> files;
    if (fs::is_directory(dir))
        for (const auto& e : fs::directory_iterator(dir))
            if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
    std::sort(files.begin(), files.end());

    std::ostringstream md;
    md << "# navtrace report\n";
    int bundles = 0;
    for (const auto& f : files) {
        std::ifstream in(f);
        json j;
        try {
            j = json::parse(in);
        } catch (const json::exception&) {
            continue;
        }
        if (!j.is_object() || !j.contains("experiments") || !j.contains("meta")) continue;
        ++bundles;
        const auto& meta = j["meta"];
        md << "\n## " << f.filename().string() << "\n\n";
        md << "- overall: " << (j.value("passed", false) ? "PASS" : "FAIL") << '\n';
        for (const char* k : {"version", "config_hash", "seed"})
            if (meta.contains(k)) md << "- " << k << ": `" << meta[k].get<std::string>() << "`\n";
        md << "\n| experiment | result | failed flags | max ratio |\n|---|---|---|---|\n";
        for (const auto& [name, ex] : j["experiments"].items()) {
            std::vector<std::string> failed;
            for (const auto& [flag, ok] : ex["flags"].items())
                if (!ok.get<bool>()) failed.push_back(flag);
            double worst = 0.0;
            bool any = false;
            for (const auto& [key, v] : ex["summary"].items())
                if (key.rfind("max_ratio:", 0) == 0 && v.is_number()) {
                    worst = any ? std::max(worst, v.get<double>()) : v.get<double>();
                    any = true;
                }
            md << "| " << name << " | " << (ex.value("passed", false) ? "pass" : "FAIL") << " | ";
            for (std::size_t i = 0; i < failed.size(); ++i) md << (i ? ", " : "") << '`' << failed[i] << '`';
            md << " | " << (any ? fmt(worst) : "-") << " |\n";
        }
        if (!j["errors"].empty()) {
            md << "\nErrors:\n\n";
            for (const auto& e : j["errors"])
                md << "- " << e.value("theorem", "") << " (" << e.value("kind", "") << "): " << e.value("message", "")
                   << '\n';
        }
    }
    if (bundles == 0) throw InputError(dir.string() + ": no report bundles found");
    return md.str();
}

}  // namespace navtrace::cli

#include <casbridge/latex_parser.hpp>
#include <casbridge/profiles.hpp>
#include <casbridge/render_latex.hpp>
#include <casbridge/render_mathml.hpp>
#include <casbridge/render_unicode.hpp>
#include <casbridge/repl.hpp>
#include <casbridge/server.hpp>

#include <CLI11.hpp>

#include <csignal>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>
#include <string>

#include <unistd.h>

namespace {

using namespace casbridge;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

ProfileRegistry registry_from(const std::string& profiles_path) {
    if (profiles_path.empty()) return builtin_registry();
    return load_profiles(read_file(profiles_path));
}

std::string latex_arg(const std::string& latex) {
    if (!latex.empty() && latex != "-") return latex;
    std::string all((std::istreambuf_iterator<char>(std::cin)), std::istreambuf_iterator<char>());
    while (!all.empty() && (all.back() == '\n' || all.back() == '\r')) all.pop_back();
    return all;
}

int report_parse_error(const formula::ParseResult& r, const std::string& latex) {
    std::cerr << "casbridge: parse error at " << r.error->to_string() << '\n';
    std::cerr << "  " << latex << '\n';
    std::cerr << "  " << std::string(std::min(r.error->offset, latex.size()), ' ') << "^\n";
    return 1;
}

void print_warnings(const formula::ParseResult& r) {
    for (const auto& w : r.warnings) std::cerr << "casbridge: warning at offset " << w.offset << ": " << w.message << '\n';
}

int serve(const std::string& listen, const std::string& corpus_dir, const std::string& config_path,
          const std::string& profiles_path, const std::string& transcript_dir) {
    ServiceFileConfig file;
    if (!config_path.empty()) file = load_service_config(config_path);

    ServerConfig cfg;
    cfg.listen = !listen.empty() ? listen : file.listen.value_or("127.0.0.1:7431");
    if (!corpus_dir.empty()) {
        cfg.corpus_dir = corpus_dir;
    } else if (file.corpus_dir) {
        cfg.corpus_dir = *file.corpus_dir;
    }
    cfg.registry = registry_from(!profiles_path.empty() ? profiles_path : file.profiles.value_or(""));
    const auto tdir = !transcript_dir.empty() ? transcript_dir : file.transcript_dir.value_or("");
    if (!tdir.empty()) {
        std::filesystem::create_directories(tdir);
        cfg.session_options.transcript_dir = tdir;
    }

    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);

    Server server(std::move(cfg));
    server.start();
    std::cout << "casbridge: listening on port " << server.port() << " (corpora in "
              << server.corpora().dir().string() << ")" << std::endl;
    int sig = 0;
    sigwait(&set, &sig);
    std::cout << "casbridge: shutting down" << std::endl;
    server.stop();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"casbridge: computer algebra sessions with rendered math"};
    app.require_subcommand(1);

    auto* serve_cmd = app.add_subcommand("serve", "run the wire protocol service");
    std::string listen, corpus_dir, config_path, profiles_path, transcript_dir;
    serve_cmd->add_option("--listen", listen, "host:port to listen on (default 127.0.0.1:7431)");
    serve_cmd->add_option("--corpus-dir", corpus_dir, "directory of replay corpora");
    serve_cmd->add_option("--config", config_path, "YAML service config; flags override it");
    serve_cmd->add_option("--profiles", profiles_path, "YAML backend profiles (default: built-in)");
    serve_cmd->add_option("--transcript-dir", transcript_dir, "write session transcripts here");

    auto* repl_cmd = app.add_subcommand("repl", "interactive terminal session");
    std::string profile, replay, render = "unicode", connect, repl_corpus, repl_profiles;
    bool ascii = false;
    bool echo = false;
    repl_cmd->add_option("--profile", profile, "backend profile")->required();
    repl_cmd->add_option("--replay", replay, "replay the named corpus instead of running the backend");
    repl_cmd->add_option("--render", render, "unicode, latex or mathml")
        ->check(CLI::IsMember({"unicode", "latex", "mathml"}));
    repl_cmd->add_flag("--ascii", ascii, "ASCII glyphs only");
    repl_cmd->add_option("--connect", connect, "host:port of a running service");
    repl_cmd->add_option("--corpus-dir", repl_corpus, "directory of replay corpora");
    repl_cmd->add_option("--profiles", repl_profiles, "YAML backend profiles (default: built-in)");
    repl_cmd->add_flag("--echo", echo, "print input lines (default when stdin is not a terminal)");

    auto* profiles_cmd = app.add_subcommand("profiles", "backend profiles");
    profiles_cmd->require_subcommand(1);
    auto* dump_cmd = profiles_cmd->add_subcommand("dump", "print the loaded profiles as YAML");
    std::string dump_profiles_path;
    dump_cmd->add_option("--config", dump_profiles_path, "YAML profiles file (default: built-in)");

    auto* parse_cmd = app.add_subcommand("parse", "parse LaTeX math");
    std::string parse_latex, dump_kind = "ast";
    parse_cmd->add_option("--latex", parse_latex, "input; '-' or absent reads stdin");
    parse_cmd->add_option("--dump", dump_kind, "ast or latex")->check(CLI::IsMember({"ast", "latex"}));

    auto* render_cmd = app.add_subcommand("render", "render LaTeX math");
    std::string render_latex, target = "unicode";
    bool render_ascii = false;
    render_cmd->add_option("--latex", render_latex, "input; '-' or absent reads stdin");
    render_cmd->add_option("--target", target, "unicode, latex or mathml")
        ->check(CLI::IsMember({"unicode", "latex", "mathml"}));
    render_cmd->add_flag("--ascii", render_ascii, "ASCII glyphs only");

    CLI11_PARSE(app, argc, argv);

    try {
        if (serve_cmd->parsed()) return serve(listen, corpus_dir, config_path, profiles_path, transcript_dir);

        if (repl_cmd->parsed()) {
            ReplOptions opt;
            opt.profile = profile;
            if (!replay.empty()) opt.replay = replay;
            opt.target = *render_target_from_string(render);
            opt.ascii = ascii;
            if (!connect.empty()) opt.connect = connect;
            if (!repl_corpus.empty()) opt.corpus_dir = repl_corpus;
            opt.registry = registry_from(repl_profiles);
            opt.echo_input = echo || !::isatty(STDIN_FILENO);
            return run_repl(opt, std::cin, std::cout, std::cerr);
        }

        if (dump_cmd->parsed()) {
            std::cout << dump_profiles(registry_from(dump_profiles_path));
            return 0;
        }

        if (parse_cmd->parsed()) {
            const auto latex = latex_arg(parse_latex);
            const auto r = formula::parse(latex);
            if (!r.formula) return report_parse_error(r, latex);
            print_warnings(r);
            if (dump_kind == "latex") {
                std::cout << formula::to_canonical_latex(*r.formula) << '\n';
            } else {
                std::cout << formula::dump_ast(*r.formula);
            }
            return 0;
        }

        if (render_cmd->parsed()) {
            const auto latex = latex_arg(render_latex);
            const auto r = formula::parse(latex);
            if (!r.formula) return report_parse_error(r, latex);
            print_warnings(r);
            std::cout << render_math(latex, *render_target_from_string(target), render_ascii) << '\n';
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "casbridge: " << e.what() << '\n';
        return 2;
    }
    return 0;
}

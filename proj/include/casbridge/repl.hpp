#pragma once

// Terminal client: drives a session over the wire and renders math inline.

#include <casbridge/client.hpp>
#include <casbridge/latex_parser.hpp>
#include <casbridge/render_latex.hpp>
#include <casbridge/render_mathml.hpp>
#include <casbridge/render_unicode.hpp>
#include <casbridge/server.hpp>

#include <filesystem>
#include <istream>
#include <memory>
#include <optional>
#include <ostream>
#include <string>

namespace casbridge {

enum class RenderTarget { unicode, latex, mathml };

inline std::optional<RenderTarget> render_target_from_string(std::string_view s) {
    if (s == "unicode") return RenderTarget::unicode;
    if (s == "latex") return RenderTarget::latex;
    if (s == "mathml") return RenderTarget::mathml;
    return std::nullopt;
}

inline constexpr std::string_view kQuestionPrefix = "[?] ";

struct ReplOptions {
    std::string profile;
    std::optional<std::string> replay;
    RenderTarget target = RenderTarget::unicode;
    bool ascii = false;
    // host:port of a running service; without it an in-process service is started.
    std::optional<std::string> connect;
    std::filesystem::path corpus_dir = default_corpus_dir();
    ProfileRegistry registry = builtin_registry();
    // Print each input line after its prompt, for non-interactive runs.
    bool echo_input = false;
};

/// Math as printed by the REPL, without a trailing newline.
inline std::string render_math(const std::string& latex, RenderTarget target, bool ascii) {
    const auto r = formula::parse(latex);
    if (!r.formula) return latex;
    switch (target) {
        case RenderTarget::latex: return formula::to_canonical_latex(*r.formula);
        case RenderTarget::mathml: return formula::to_mathml(*r.formula);
        case RenderTarget::unicode: break;
    }
    auto box = formula::to_unicode(*r.formula, ascii ? formula::GlyphMode::ascii : formula::GlyphMode::unicode).str();
    if (!box.empty() && box.back() == '\n') box.pop_back();
    return box;
}

inline void print_event(const SessionEvent& e, const ReplOptions& opt, std::ostream& out, std::ostream& err) {
    switch (e.kind) {
        case EventKind::math: {
            const auto latex = e.latex.value_or("");
            if (!formula::parse(latex).formula) err << "casbridge: cannot parse math output; showing LaTeX\n";
            out << render_math(latex, opt.target, opt.ascii) << '\n';
            break;
        }
        case EventKind::question: out << kQuestionPrefix << text::sanitize_utf8(e.raw); break;
        case EventKind::plot_event:
            out << "[plot] " << (e.plot_path ? *e.plot_path : std::string(text::trim(e.raw))) << '\n';
            break;
        case EventKind::client_input:
            if (opt.echo_input) out << e.text.value_or("") << '\n';
            break;
        case EventKind::session_error: err << "casbridge: " << e.text.value_or("") << '\n'; break;
        default: out << text::sanitize_utf8(e.raw); break;
    }
}

/// Returns the process exit status.
inline int run_repl(const ReplOptions& opt, std::istream& in, std::ostream& out, std::ostream& err) {
    std::unique_ptr<Server> server;
    std::string addr;
    try {
        if (opt.connect) {
            addr = *opt.connect;
        } else {
            ServerConfig cfg;
            cfg.corpus_dir = opt.corpus_dir;
            cfg.registry = opt.registry;
            server = std::make_unique<Server>(std::move(cfg));
            server->start();
            addr = "127.0.0.1:" + std::to_string(server->port());
        }
    } catch (const std::exception& e) {
        err << "casbridge: " << e.what() << '\n';
        return 2;
    }

    try {
        auto client = WireClient::connect(addr);
        const auto mode = opt.replay ? SessionMode::replay : SessionMode::live;
        const auto created = client.request(create_request(opt.profile, mode, opt.replay));
        if (created.type == MessageType::error) {
            err << "casbridge: " << created.body.value("message", "") << '\n';
            return 2;
        }
        const auto id = created.session_id.value_or("");
        while (true) {
            auto m = client.receive();
            if (!m) {
                err << "casbridge: connection closed\n";
                return 1;
            }
            if (m->type == MessageType::error) {
                err << "casbridge: " << m->body.value("message", "") << '\n';
                continue;
            }
            if (m->type != MessageType::event_batch || m->session_id != id) continue;
            for (const auto& j : m->body.at("events")) print_event(event_from_json(j), opt, out, err);
            out.flush();
            const auto state = state_from_json(m->body.at("state"));
            if (m->body.value("final", false)) {
                if (state.reason == EndReason::spawn_failed) return 1;
                return 0;
            }
            while (state.accepts_input()) {
                std::string line;
                if (!std::getline(in, line)) {
                    const auto r = client.request(terminate_request(id));
                    for (const auto& j : r.body.at("events")) print_event(event_from_json(j), opt, out, err);
                    out.flush();
                    return 0;
                }
                const auto r = client.request(input_request(id, line));
                if (r.type != MessageType::error) break;
                err << "casbridge: " << r.body.value("message", "") << '\n';
            }
        }
    } catch (const std::exception& e) {
        err << "casbridge: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace casbridge

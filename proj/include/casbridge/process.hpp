#pragma once

// Child processes for live sessions: pipes (stderr merged into stdout) or a
// pseudo-terminal with echo switched off.

#include <cerrno>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/ioctl.h>
#include <sys/wait.h>
#include <termios.h>
#include <unistd.h>

namespace casbridge {

class SpawnError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline std::optional<std::string> resolve_executable(const std::string& name) {
    if (name.empty()) return std::nullopt;
    if (name.find('/') != std::string::npos) {
        if (::access(name.c_str(), X_OK) == 0) return name;
        return std::nullopt;
    }
    const char* path = std::getenv("PATH");
    std::string_view rest = path != nullptr ? path : "/usr/bin:/bin";
    while (true) {
        const auto colon = rest.find(':');
        std::string dir(rest.substr(0, colon));
        if (dir.empty()) dir = ".";
        const std::string candidate = dir + "/" + name;
        if (::access(candidate.c_str(), X_OK) == 0 && !std::filesystem::is_directory(candidate)) return candidate;
        if (colon == std::string_view::npos) break;
        rest.remove_prefix(colon + 1);
    }
    return std::nullopt;
}

class ChildProcess {
public:
    enum class ReadStatus { data, timeout, eof };

    ChildProcess() = default;
    ChildProcess(const ChildProcess&) = delete;
    ChildProcess& operator=(const ChildProcess&) = delete;
    ChildProcess(ChildProcess&& o) noexcept { *this = std::move(o); }
    ChildProcess& operator=(ChildProcess&& o) noexcept {
        if (this != &o) {
            close_fds();
            pid_ = std::exchange(o.pid_, -1);
            read_fd_ = std::exchange(o.read_fd_, -1);
            write_fd_ = std::exchange(o.write_fd_, -1);
            exited_ = o.exited_;
            status_ = o.status_;
        }
        return *this;
    }
    ~ChildProcess() {
        if (pid_ > 0 && !exited_) {
            ::kill(pid_, SIGKILL);
            reap(true);
        }
        close_fds();
    }

    static ChildProcess spawn(const std::vector<std::string>& argv, bool use_pty) {
        if (argv.empty()) throw SpawnError("empty command");
        const auto exe = resolve_executable(argv[0]);
        if (!exe) throw SpawnError(argv[0] + ": executable not found");

        int parent_fd = -1;
        int child_in = -1;
        int child_out = -1;
        int parent_write = -1;
        std::string slave_name;
        if (use_pty) {
            parent_fd = ::posix_openpt(O_RDWR | O_NOCTTY);
            if (parent_fd < 0 || ::grantpt(parent_fd) != 0 || ::unlockpt(parent_fd) != 0) {
                const int err = errno;
                if (parent_fd >= 0) ::close(parent_fd);
                throw SpawnError(std::string("cannot allocate pseudo-terminal: ") + std::strerror(err));
            }
            slave_name = ::ptsname(parent_fd);
            parent_write = parent_fd;
        } else {
            int in[2];
            int out[2];
            if (::pipe2(in, O_CLOEXEC) != 0) throw SpawnError(std::string("pipe: ") + std::strerror(errno));
            if (::pipe2(out, O_CLOEXEC) != 0) {
                ::close(in[0]);
                ::close(in[1]);
                throw SpawnError(std::string("pipe: ") + std::strerror(errno));
            }
            child_in = in[0];
            parent_write = in[1];
            parent_fd = out[0];
            child_out = out[1];
        }

        int report[2];
        if (::pipe2(report, O_CLOEXEC) != 0) throw SpawnError(std::string("pipe: ") + std::strerror(errno));

        std::vector<char*> args;
        for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
        args.push_back(nullptr);

        const pid_t pid = ::fork();
        if (pid < 0) throw SpawnError(std::string("fork: ") + std::strerror(errno));
        if (pid == 0) {
            ::close(report[0]);
            if (use_pty) {
                ::setsid();
                const int slave = ::open(slave_name.c_str(), O_RDWR);
                if (slave < 0) child_fail(report[1]);
                ::ioctl(slave, TIOCSCTTY, 0);
                termios t{};
                if (::tcgetattr(slave, &t) == 0) {
                    t.c_lflag &= ~static_cast<tcflag_t>(ECHO | ECHONL);
                    ::tcsetattr(slave, TCSANOW, &t);
                }
                ::dup2(slave, 0);
                ::dup2(slave, 1);
                ::dup2(slave, 2);
                if (slave > 2) ::close(slave);
                ::close(parent_fd);
            } else {
                ::dup2(child_in, 0);
                ::dup2(child_out, 1);
                ::dup2(child_out, 2);
            }
            ::execv(exe->c_str(), args.data());
            child_fail(report[1]);
        }

        ::close(report[1]);
        if (child_in >= 0) ::close(child_in);
        if (child_out >= 0) ::close(child_out);
        int child_errno = 0;
        const auto n = ::read(report[0], &child_errno, sizeof child_errno);
        ::close(report[0]);

        ChildProcess p;
        p.pid_ = pid;
        p.read_fd_ = parent_fd;
        p.write_fd_ = parent_write;
        if (n == static_cast<ssize_t>(sizeof child_errno)) {
            p.reap(true);
            throw SpawnError(argv[0] + ": " + std::strerror(child_errno));
        }
        return p;
    }

    bool running() const { return pid_ > 0 && !exited_; }
    pid_t pid() const { return pid_; }

    void write_all(std::string_view bytes) {
        while (!bytes.empty()) {
            const auto n = ::write(write_fd_, bytes.data(), bytes.size());
            if (n < 0) {
                if (errno == EINTR) continue;
                throw std::runtime_error(std::string("write to backend: ") + std::strerror(errno));
            }
            bytes.remove_prefix(static_cast<std::size_t>(n));
        }
    }

    ReadStatus read_some(std::string& out, int timeout_ms) {
        if (read_fd_ < 0) return ReadStatus::eof;
        pollfd p{read_fd_, POLLIN, 0};
        const int r = ::poll(&p, 1, timeout_ms);
        if (r == 0) return ReadStatus::timeout;
        if (r < 0) return errno == EINTR ? ReadStatus::timeout : ReadStatus::eof;
        char buf[4096];
        const auto n = ::read(read_fd_, buf, sizeof buf);
        if (n > 0) {
            out.append(buf, static_cast<std::size_t>(n));
            return ReadStatus::data;
        }
        if (n < 0 && errno == EINTR) return ReadStatus::timeout;
        // A pty reports EIO once the child side is closed.
        return ReadStatus::eof;
    }

    /// Waits up to `timeout` for the child to exit, then kills it.
    void finish(std::chrono::milliseconds timeout) {
        if (pid_ <= 0) return;
        const auto deadline = std::chrono::steady_clock::now() + timeout;
        while (!exited_ && std::chrono::steady_clock::now() < deadline) {
            reap(false);
            if (!exited_) std::this_thread::sleep_for(std::chrono::milliseconds(10));
        }
        if (!exited_) {
            ::kill(pid_, SIGKILL);
            reap(true);
        }
    }

    std::optional<int> exit_status() const {
        if (!exited_) return std::nullopt;
        if (WIFEXITED(status_)) return WEXITSTATUS(status_);
        return 128 + WTERMSIG(status_);
    }

private:
    [[noreturn]] static void child_fail(int report_fd) {
        const int err = errno;
        [[maybe_unused]] auto n = ::write(report_fd, &err, sizeof err);
        ::_exit(127);
    }

    void reap(bool block) {
        if (pid_ <= 0 || exited_) return;
        const pid_t r = ::waitpid(pid_, &status_, block ? 0 : WNOHANG);
        if (r == pid_) exited_ = true;
    }

    void close_fds() {
        if (write_fd_ >= 0 && write_fd_ != read_fd_) ::close(write_fd_);
        if (read_fd_ >= 0) ::close(read_fd_);
        read_fd_ = write_fd_ = -1;
    }

    pid_t pid_ = -1;
    int read_fd_ = -1;
    int write_fd_ = -1;
    bool exited_ = false;
    int status_ = 0;
};

}  // namespace casbridge

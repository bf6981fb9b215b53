#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sdslab {

// User dialogue act inventory. Fixed order; index = one-hot position.
enum class UserActType : int {
    hello = 0,
    inform,
    request,
    reqalts,
    affirm,
    negate,
    bye,
    null_act,
};

inline constexpr int kNumUserActTypes = 8;

inline const std::array<const char*, kNumUserActTypes>& user_act_names() {
    static const std::array<const char*, kNumUserActTypes> names = {
        "hello", "inform", "request", "reqalts", "affirm", "negate", "bye", "null"};
    return names;
}

inline const char* user_act_name(UserActType t) { return user_act_names()[static_cast<int>(t)]; }

inline UserActType user_act_from_name(const std::string& name) {
    const auto& names = user_act_names();
    for (int i = 0; i < kNumUserActTypes; ++i)
        if (name == names[i]) return static_cast<UserActType>(i);
    throw std::invalid_argument("unknown user act type: " + name);
}

// Single user act; slot/value empty when the type carries no arguments.
// inform(slot=value), request(slot), everything else bare.
struct UserAct {
    UserActType type = UserActType::null_act;
    std::string slot;
    std::string value;

    bool operator==(const UserAct&) const = default;
};

inline UserAct make_inform(std::string slot, std::string value) {
    return UserAct{UserActType::inform, std::move(slot), std::move(value)};
}

inline UserAct make_request(std::string slot) {
    return UserAct{UserActType::request, std::move(slot), ""};
}

inline UserAct make_user_act(UserActType t) { return UserAct{t, "", ""}; }

// System summary action kinds. The ordered 20-element inventory is built
// per ontology (slot-parameterised kinds expand over the slot lists).
enum class SummaryKind : int {
    request_slot = 0,
    confirm_slot,
    select_slot,
    inform_offer,
    inform_requested,
    inform_no_match,
    repeat_last,
    reqmore,
    hello,
    bye,
    restart,
    inform_alternatives,
};

struct SummaryAction {
    SummaryKind kind = SummaryKind::hello;
    // constraint-slot index for request/confirm/select,
    // requestable-slot index for inform_requested, -1 otherwise
    int slot = -1;

    bool operator==(const SummaryAction&) const = default;
};

// Full system act: the summary action grounded against the database.
struct SystemAct {
    SummaryAction summary;
    std::string venue;  // offers only
    std::vector<std::pair<std::string, std::string>> args;
};

}  // namespace sdslab

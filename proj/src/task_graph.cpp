#include "plancurate/task_graph.hpp"

#include "plancurate/util.hpp"

#include <algorithm>
#include <functional>

namespace plancurate {

namespace {

constexpr EnumNames<NodeStatus, 3> kStatusNames{{{
    {NodeStatus::unexplored, "unexplored"},
    {NodeStatus::exploring, "exploring"},
    {NodeStatus::completed, "completed"},
}}};

constexpr EnumNames<Decomposition, 3> kDecompositionNames{{{
    {Decomposition::none, "none"},
    {Decomposition::standard, "standard"},
    {Decomposition::fork, "fork"},
}}};

std::string single_line(std::string_view text) {
    std::string out(text);
    std::replace(out.begin(), out.end(), '\n', ' ');
    std::replace(out.begin(), out.end(), '\r', ' ');
    return out;
}

[[noreturn]] void corrupt(const std::string& what) {
    throw Error(ErrorCode::corrupt_session, "task tree invariant violated: " + what);
}

}  // namespace

std::string_view to_string(NodeStatus s) { return kStatusNames.name(s); }
std::string_view to_string(Decomposition d) { return kDecompositionNames.name(d); }

NodeStatus parse_node_status(std::string_view text) {
    return kStatusNames.parse(text, ErrorCode::corrupt_session, "status");
}

Decomposition parse_decomposition(std::string_view text) {
    return kDecompositionNames.parse(text, ErrorCode::corrupt_session, "decomposition");
}

TaskTree TaskTree::create(std::string_view goal_title, std::string_view goal_description,
                          std::string created_at) {
    if (is_blank(goal_title)) throw Error(ErrorCode::empty_goal, "goal title is empty");
    TaskTree tree;
    TaskNode root;
    root.id = "n1";
    root.title = std::string(goal_title);
    root.description = std::string(goal_description);
    root.status = NodeStatus::exploring;
    root.level = 0;
    tree.root_ = root.id;
    tree.index_.emplace(root.id, 0);
    tree.nodes_.push_back(std::move(root));
    tree.created_at_ = std::move(created_at);
    return tree;
}

const TaskNode& TaskTree::node(const NodeId& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) {
        throw Error(ErrorCode::unknown_node, "unknown node '" + id + "'", Json{{"node", id}});
    }
    return nodes_[it->second];
}

TaskNode& TaskTree::mutable_node(const NodeId& id) {
    return const_cast<TaskNode&>(std::as_const(*this).node(id));
}

void TaskTree::check_attach(const TaskNode& parent, std::size_t count) const {
    if (!parent.children.empty()) {
        throw Error(ErrorCode::already_decomposed, "node '" + parent.id + "' is already decomposed",
                    Json{{"node", parent.id}});
    }
    if (count == 0) throw Error(ErrorCode::empty_subtask_list, "no subtasks to attach");
    if (count > kMaxFanout) {
        throw Error(ErrorCode::tree_limit, "fanout limit exceeded",
                    Json{{"limit", kMaxFanout}, {"requested", count}});
    }
    if (parent.level >= kMaxLevel) {
        throw Error(ErrorCode::tree_limit, "depth limit reached",
                    Json{{"limit", kMaxLevel}, {"node", parent.id}});
    }
}

std::vector<NodeId> TaskTree::attach_subtasks(const NodeId& parent,
                                              std::span<const SubtaskSpec> subtasks,
                                              Decomposition kind) {
    std::vector<NodeId> ids;
    ids.reserve(subtasks.size());
    for (std::size_t i = 0; i < subtasks.size(); ++i) {
        ids.push_back("n" + std::to_string(nodes_.size() + i + 1));
    }
    attach_subtasks_with_ids(parent, ids, subtasks, kind);
    return ids;
}

void TaskTree::attach_subtasks_with_ids(const NodeId& parent, std::span<const NodeId> ids,
                                        std::span<const SubtaskSpec> subtasks,
                                        Decomposition kind) {
    const TaskNode& p = node(parent);
    check_attach(p, subtasks.size());
    if (kind == Decomposition::none) {
        throw Error(ErrorCode::precondition_failed, "decomposition kind must be standard or fork");
    }
    if (ids.size() != subtasks.size()) {
        throw Error(ErrorCode::corrupt_session, "subtask id count does not match subtask count");
    }
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i].empty() || index_.contains(ids[i]) ||
            std::find(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(i), ids[i]) !=
                ids.begin() + static_cast<std::ptrdiff_t>(i)) {
            throw Error(ErrorCode::corrupt_session, "duplicate node id '" + ids[i] + "'");
        }
        if (is_blank(subtasks[i].title)) {
            throw Error(ErrorCode::invalid_entry, "subtask title is empty");
        }
    }

    const int level = p.level + 1;
    const std::size_t parent_index = index_.at(parent);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        TaskNode child;
        child.id = ids[i];
        child.title = subtasks[i].title;
        child.description = subtasks[i].description;
        child.estimated_duration = subtasks[i].estimated_duration;
        child.parent = parent;
        child.level = level;
        index_.emplace(child.id, nodes_.size());
        nodes_.push_back(std::move(child));
    }
    TaskNode& pm = nodes_[parent_index];
    pm.children.assign(ids.begin(), ids.end());
    pm.decomposition = kind;
}

void TaskTree::set_draft_ref(const NodeId& id, std::string draft_key) {
    TaskNode& n = mutable_node(id);
    n.draft_ref = std::move(draft_key);
    n.status = NodeStatus::completed;

    // Roll completion up while every sibling is complete.
    std::optional<NodeId> up = n.parent;
    while (up) {
        TaskNode& p = mutable_node(*up);
        const bool all_done = std::all_of(p.children.begin(), p.children.end(), [&](const NodeId& c) {
            return node(c).status == NodeStatus::completed;
        });
        if (!all_done || p.status == NodeStatus::completed) break;
        p.status = NodeStatus::completed;
        up = p.parent;
    }
}

void TaskTree::mark_exploring(const NodeId& id) {
    TaskNode& n = mutable_node(id);
    if (n.status == NodeStatus::unexplored) n.status = NodeStatus::exploring;
}

std::string TaskTree::outline() const {
    std::string out;
    if (nodes_.empty()) return out;
    std::function<void(const TaskNode&)> visit = [&](const TaskNode& n) {
        out.append(static_cast<std::size_t>(n.level) * 2, ' ');
        out += single_line(n.title);
        if (!n.description.empty()) {
            out += ": ";
            out += single_line(n.description);
        }
        out += '\n';
        for (const auto& c : n.children) visit(node(c));
    };
    visit(node(root_));
    return out;
}

std::vector<NodeId> TaskTree::node_path(const NodeId& id) const {
    std::vector<NodeId> path;
    const TaskNode* cur = &node(id);
    path.push_back(cur->id);
    while (cur->parent) {
        cur = &node(*cur->parent);
        path.push_back(cur->id);
    }
    std::reverse(path.begin(), path.end());
    return path;
}

void TaskTree::validate() const {
    if (nodes_.empty()) corrupt("tree has no nodes");
    if (index_.size() != nodes_.size()) corrupt("duplicate node ids");
    std::size_t roots = 0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const TaskNode& n = nodes_[i];
        auto it = index_.find(n.id);
        if (it == index_.end() || it->second != i) corrupt("index out of sync for '" + n.id + "'");
        if (!n.parent) {
            ++roots;
            if (n.level != 0) corrupt("root level is not 0");
            if (n.id != root_) corrupt("parentless node '" + n.id + "' is not the root");
        } else {
            if (!index_.contains(*n.parent)) corrupt("dangling parent of '" + n.id + "'");
            const TaskNode& p = node(*n.parent);
            if (std::find(p.children.begin(), p.children.end(), n.id) == p.children.end()) {
                corrupt("'" + n.id + "' missing from its parent's children");
            }
        }
        if (n.level > kMaxLevel) corrupt("depth limit exceeded at '" + n.id + "'");
        if (n.children.size() > kMaxFanout) corrupt("fanout limit exceeded at '" + n.id + "'");
        if ((n.decomposition == Decomposition::none) != n.children.empty()) {
            corrupt("decomposition/children mismatch at '" + n.id + "'");
        }
        for (const auto& c : n.children) {
            if (!index_.contains(c)) corrupt("dangling child '" + c + "'");
            const TaskNode& child = node(c);
            if (child.parent != n.id) corrupt("child '" + c + "' has wrong parent");
            if (child.level != n.level + 1) corrupt("child '" + c + "' has wrong level");
        }
        if (n.status == NodeStatus::completed && !n.draft_ref) {
            const bool all_done =
                !n.children.empty() &&
                std::all_of(n.children.begin(), n.children.end(), [&](const NodeId& c) {
                    return node(c).status == NodeStatus::completed;
                });
            if (!all_done) corrupt("'" + n.id + "' completed without draft or completed children");
        }
    }
    if (roots != 1) corrupt("expected exactly one root");

    // Parent walk terminates at the root within `level` steps.
    for (const auto& n : nodes_) {
        const TaskNode* cur = &n;
        int steps = 0;
        while (cur->parent) {
            cur = &node(*cur->parent);
            if (++steps > n.level) corrupt("cycle through '" + n.id + "'");
        }
        if (cur->id != root_) corrupt("'" + n.id + "' does not reach the root");
    }
}

Json TaskTree::to_json() const {
    Json nodes = Json::object();
    for (const auto& n : nodes_) {
        nodes[n.id] = Json{
            {"id", n.id},
            {"title", n.title},
            {"description", n.description},
            {"estimated_duration", n.estimated_duration},
            {"status", to_string(n.status)},
            {"decomposition", to_string(n.decomposition)},
            {"draft_ref", n.draft_ref ? Json(*n.draft_ref) : Json(nullptr)},
            {"parent", n.parent ? Json(*n.parent) : Json(nullptr)},
            {"children", n.children},
            {"level", n.level},
        };
    }
    return Json{{"root", root_}, {"created_at", created_at_}, {"nodes", std::move(nodes)}};
}

TaskTree TaskTree::from_json(const Json& j) {
    TaskTree tree;
    try {
        tree.root_ = j.at("root").get<std::string>();
        tree.created_at_ = j.at("created_at").get<std::string>();
        for (const auto& [key, v] : j.at("nodes").items()) {
            TaskNode n;
            n.id = v.at("id").get<std::string>();
            if (n.id != key) corrupt("node table key '" + key + "' does not match id");
            n.title = v.at("title").get<std::string>();
            n.description = v.at("description").get<std::string>();
            n.estimated_duration = v.at("estimated_duration").get<std::string>();
            n.status = parse_node_status(v.at("status").get<std::string>());
            n.decomposition = parse_decomposition(v.at("decomposition").get<std::string>());
            if (!v.at("draft_ref").is_null()) n.draft_ref = v.at("draft_ref").get<std::string>();
            if (!v.at("parent").is_null()) n.parent = v.at("parent").get<std::string>();
            n.children = v.at("children").get<std::vector<NodeId>>();
            n.level = v.at("level").get<int>();
            if (tree.index_.contains(n.id)) corrupt("duplicate node id '" + n.id + "'");
            tree.index_.emplace(n.id, tree.nodes_.size());
            tree.nodes_.push_back(std::move(n));
        }
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::corrupt_session, std::string("malformed task tree: ") + e.what());
    }
    tree.validate();
    return tree;
}

}  // namespace plancurate

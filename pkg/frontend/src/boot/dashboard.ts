/** Experimenter dashboard: protocol control, demographics, node health. */

import { connectGateway, el, renderLoop } from "./common.js";
import { Dashboard } from "../dashboard.js";
import { STAGES, Stage } from "../envelopes.js";

async function main() {
  const client = await connectGateway();
  const dash = new Dashboard(client);
  await client.subscribe(["session/*"]);

  async function refreshChecklist() {
    const snap = (await client.call("_snapshot")).payload as {
      checklist?: string[];
      ideas_box?: string[];
    };
    el<HTMLUListElement>("checklist").innerHTML = (snap.checklist ?? [])
      .map((line) => `<li>${line}</li>`)
      .join("");
    el<HTMLSpanElement>("ideas").textContent = (snap.ideas_box ?? []).join(" · ");
  }
  await refreshChecklist();

  const stageRow = el<HTMLDivElement>("stages");
  STAGES.forEach((stage) => {
    const chip = document.createElement("button");
    chip.id = `stage-${stage}`;
    chip.textContent = stage;
    chip.onclick = async () => {
      await dash.advance(stage as Stage);
      await refreshChecklist();
    };
    stageRow.appendChild(chip);
  });
  el<HTMLButtonElement>("new-session").onclick = () => {
    const condition = el<HTMLSelectElement>("condition").value as
      | "child_child"
      | "child_robot";
    void dash.newSession(condition);
  };
  el<HTMLButtonElement>("submit-demo").onclick = () => {
    const purple = Number(el<HTMLInputElement>("age-purple").value);
    const yellow = Number(el<HTMLInputElement>("age-yellow").value);
    void dash.submitDemographics([
      ["purple", purple],
      ["yellow", yellow],
    ]);
  };

  const healthTable = el<HTMLTableElement>("health");
  const errorBox = el<HTMLDivElement>("inline-error");
  renderLoop(() => {
    STAGES.forEach((stage) => {
      el<HTMLButtonElement>(`stage-${stage}`).classList.toggle("active", dash.stage === stage);
    });
    el<HTMLSpanElement>("session-label").textContent = dash.sessionId
      ? `${dash.sessionId} (${dash.condition})`
      : "no session";
    errorBox.textContent = dash.inlineError ?? "";
    healthTable.innerHTML =
      "<tr><th>module</th><th>status</th><th>age</th><th>epoch</th><th></th></tr>" +
      dash.health
        .map(
          (row) => `
        <tr>
          <td>${row.name}</td>
          <td class="${row.running ? "ok" : "stale"}">${row.running ? "running" : "stale"}</td>
          <td>${(row.ageUs / 1e6).toFixed(1)}s</td>
          <td>${row.epoch}</td>
          <td><button data-restart="${row.name}">restart</button></td>
        </tr>`
        )
        .join("");
    healthTable.querySelectorAll("button[data-restart]").forEach((b) => {
      (b as HTMLButtonElement).onclick = () =>
        void dash.restart((b as HTMLButtonElement).dataset.restart!);
    });
  });
}

main().catch((err) => {
  document.body.innerHTML = `<pre class="error">${String(err)}</pre>`;
});

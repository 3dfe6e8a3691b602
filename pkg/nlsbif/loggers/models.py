from typing import Optional

from sqlmodel import Field, SQLModel


class RunRecord(SQLModel, table=True):
    id: Optional[int] = Field(default=None, primary_key=True)
    run_id: str = Field(index=True)
    scenario: str
    config: str
    status: Optional[str] = None
    wall_time: Optional[float] = None


class BranchRecord(SQLModel, table=True):
    id: Optional[int] = Field(default=None, primary_key=True)
    run_id: str = Field(index=True)
    label: str
    symmetry: str
    provenance: str
    points: int
    E_min: float
    E_max: float


class BifurcationRecord(SQLModel, table=True):
    id: Optional[int] = Field(default=None, primary_key=True)
    run_id: str = Field(index=True)
    name: str
    E_star: Optional[float] = None
    lambda_prime: Optional[float] = None
    Q: Optional[float] = None
    R: Optional[float] = None
    N_prime: Optional[float] = None
    classification: Optional[str] = None

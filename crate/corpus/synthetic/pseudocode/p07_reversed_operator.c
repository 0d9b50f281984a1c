__int64 __fastcall add(int a1, int a2)
{
  return (unsigned int)(a2 + a1);
}

int __fastcall main(int argc, const char **argv, const char **envp)
{
  int v4; // [rsp+0h] [rbp-10h] BYREF
  int v5; // [rsp+4h] [rbp-Ch] BYREF

  scanf("%d %d", &v4, &v5);
  printf("%d\n", (unsigned int)add(v4, v5));
  return 0;
}

int main(int argc, const char **argv, const char **envp)
{
  int a; // [rsp+0h] [rbp-10h] BYREF
  int b; // [rsp+4h] [rbp-Ch] BYREF
  unsigned long v6; // [rsp+8h] [rbp-8h]

  v6 = __readfsqword(0x28u);
  scanf("%d %d", &a, &b);
  printf("%d\n", a * b);
  if ( __readfsqword(0x28u) != v6 )
    __stack_chk_fail();
  return 0;
}
